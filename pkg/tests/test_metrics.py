import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bkjump.metrics import accuracy, auc, max_tp_tn, roc
from oracles import mann_whitney, exhaustive_acc

S = np.array([0.1, 0.4, 0.35, 0.8])
L = np.array([0, 0, 1, 1])


def test_perfect_separation():
    assert roc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]).auc == 1.0
    assert max_tp_tn([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1])[0] == 1.0


def test_all_identical_scores():
    c = roc(np.full(10, 0.3), np.tile([0, 1], 5))
    assert c.auc == 0.5
    assert list(zip(c.fpr, c.tpr)) == [(0.0, 0.0), (1.0, 1.0)]


def test_small_example_auc():
    assert mann_whitney(S, L) == 0.75
    assert roc(S, L).auc == pytest.approx(0.75, abs=1e-15)
    assert auc(S, L) == roc(S, L).auc


def test_small_example_max_tp_tn():
    ref_acc, ref_thr = exhaustive_acc(S, L)
    acc, thr = max_tp_tn(S, L)
    assert acc == ref_acc == 0.75
    # 0.35 itself already reaches 0.75 (it admits the 0.35 positive and rejects 0.1)
    assert thr == ref_thr == 0.35


def test_random_scores_chance():
    rng = np.random.default_rng(0)
    s = rng.random(10_000)
    y = rng.permutation(np.tile([0, 1], 5_000))
    assert max_tp_tn(s, y)[0] <= 0.6


@pytest.mark.parametrize("labels", [[1, 1, 1], [0, 0], [0, 1, 2]])
def test_bad_labels(labels):
    s = np.arange(len(labels), dtype=float)
    with pytest.raises(ValueError):
        roc(s, labels)
    with pytest.raises(ValueError):
        max_tp_tn(s, labels)


def test_length_mismatch():
    with pytest.raises(ValueError):
        roc([0.1, 0.2], [0, 1, 1])


def test_inf_scores():
    c = roc([np.inf, np.inf, 0.0, 1.0], [1, 1, 0, 0])
    assert c.auc == 1.0


def test_points_descending():
    c = roc(S, L)
    thr = [p[0] for p in c.points]
    assert thr == sorted(thr, reverse=True)
    assert c.points[0][1:] == (0.0, 0.0) and c.points[-1][1:] == (1.0, 1.0)


def test_accuracy_helper():
    assert accuracy([1, 0, 1, 1], [1, 0, 0, 1]) == 0.75


def test_auc_mann_whitney_100_sets():
    rng = np.random.default_rng(7)
    for _ in range(100):
        n = int(rng.integers(2, 60))
        y = rng.integers(0, 2, n)
        y[:2] = [0, 1]
        s = np.round(rng.standard_normal(n), int(rng.integers(0, 3)))  # plenty of ties
        assert abs(roc(s, y).auc - mann_whitney(s, y)) <= 1e-12


scores_labels = st.integers(2, 80).flatmap(
    lambda n: st.tuples(
        st.lists(st.floats(-1e3, 1e3), min_size=n, max_size=n),
        st.lists(st.integers(0, 1), min_size=n, max_size=n).filter(lambda v: 0 < sum(v) < len(v)),
    )
)


@given(scores_labels)
def test_roc_monotone(sl):
    c = roc(np.array(sl[0]), np.array(sl[1]))
    assert np.all(np.diff(c.fpr) >= 0) and np.all(np.diff(c.tpr) >= 0)
    assert 0 <= c.auc <= 1
    trap = sum((f1 - f0) * (t1 + t0) / 2 for f0, f1, t0, t1 in zip(c.fpr, c.fpr[1:], c.tpr, c.tpr[1:]))
    assert c.auc == pytest.approx(trap, abs=1e-12)


@given(scores_labels, st.floats(1e-3, 1e3), st.floats(-1e3, 1e3))
def test_max_tp_tn_affine_invariance(sl, a, b):
    s, y = np.array(sl[0]), np.array(sl[1])
    t = a * s + b
    # the map must stay injective in floating point for the invariance to be exact
    if np.unique(t).size != np.unique(s).size:
        return
    assert max_tp_tn(t, y)[0] == max_tp_tn(s, y)[0]


@given(scores_labels)
def test_max_tp_tn_matches_enumeration(sl):
    s, y = np.array(sl[0]), np.array(sl[1])
    assert max_tp_tn(s, y) == pytest.approx(exhaustive_acc(s, y))
