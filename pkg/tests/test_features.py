import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats
from scipy.stats.contingency import association

from bkjump import features as F
from bkjump.kernel import make_kernel
from bkjump.synth import SynthesisConfig, synth_labeled

K = make_kernel(20.0)
N = 450


def noise(seed, n=N):
    return np.random.default_rng(seed).standard_normal(n)


def step(tau=230, amp=1.0, n=N):
    x = np.zeros(n)
    x[tau:] = amp
    return x


# ---- oracles ---------------------------------------------------------------

def oracle_f1(x):
    n = x.size
    best = 0.0
    for tau in range(n // 10, 9 * n // 10 + 1):
        s = np.zeros(n)
        s[tau:] = 1.0
        best = max(best, abs(np.corrcoef(x, s)[0, 1]))
    return best


def oracle_f2(x, taps):
    x = x - x.mean()
    best = 0.0
    for i in range(x.size - taps.size + 1):
        seg = x[i : i + taps.size]
        den = np.sqrt(sum(v * v for v in seg)) * np.sqrt(sum(t * t for t in taps))
        if den > 0:
            best = max(best, abs(sum(a * b for a, b in zip(seg, taps))) / den)
    return best


def oracle_f3(x):
    frames = [x[45 * i : 45 * (i + 1)] for i in range(10)]
    out = []
    for a, b in zip(frames, frames[1:]):
        den = np.sqrt(np.sum(a * a) * np.sum(b * b))
        out.append(0.0 if den == 0 else abs(np.sum(a * b)) / den)
    return min(out)


def oracle_f5(x):
    h = x.size // 2
    a, b = list(x[:h]), list(x[h:])
    ma, mb = sum(a) / h, sum(b) / h
    va = sum((v - ma) ** 2 for v in a) / h
    vb = sum((v - mb) ** 2 for v in b) / h
    cov = sum((p - ma) * (q - mb) for p, q in zip(a, b)) / h
    return abs(2 * cov / (va + vb + (ma - mb) ** 2))


def oracle_f8(x):
    n = x.size
    edges = np.quantile(x, np.arange(1, 8) / 8)
    table = np.zeros((2, 8))
    for i, v in enumerate(x):
        col = sum(1 for e in edges if v >= e)
        table[int(i >= n // 2), col] += 1
    table = table[:, table.sum(axis=0) > 0]
    return association(table.astype(int), method="cramer", correction=False)


# ---- f1 --------------------------------------------------------------------

@pytest.mark.parametrize("amp", [1.0, -3.0, 1e-6, 250.0])
def test_f1_clean_step(amp):
    assert F.f1_step_correlation(step(230, amp)) == pytest.approx(1.0, abs=1e-12)


def test_f1_constant():
    assert F.f1_step_correlation(np.full(N, 4.2)) == 0.0


def test_f1_noise_matches_oracle():
    x = noise(42)
    assert F.f1_step_correlation(x) == pytest.approx(oracle_f1(x), abs=1e-12)


def test_f1_short_window():
    with pytest.raises(ValueError):
        F.f1_step_correlation(np.arange(49.0))


# ---- f2 --------------------------------------------------------------------

def test_f2_kernel_itself():
    x = np.zeros(N)
    x[: K.taps.size] = K.taps
    assert F.f2_kernel_correlation(x, K) == pytest.approx(1.0, abs=1e-9)


def test_f2_constant():
    assert F.f2_kernel_correlation(np.full(N, 3.0), K) == 0.0


def test_f2_step_matches_oracle():
    x = step(230)
    assert F.f2_kernel_correlation(x, K) == pytest.approx(oracle_f2(x, K.taps), abs=1e-12)


def test_f2_noise_matches_oracle():
    x = noise(7)
    assert F.f2_kernel_correlation(x, K) == pytest.approx(oracle_f2(x, K.taps), abs=1e-12)


def test_f2_kernel_too_long():
    with pytest.raises(ValueError):
        F.f2_kernel_correlation(np.ones(100), K)


# ---- f3 --------------------------------------------------------------------

def test_f3_constant_nonzero():
    assert F.f3_adjacent_frame_correlation(np.full(N, -2.0)) == pytest.approx(1.0, abs=1e-12)


def test_f3_half_zero():
    assert F.f3_adjacent_frame_correlation(step(225)) == 0.0


def test_f3_noise_matches_oracle():
    x = noise(13)
    assert F.f3_adjacent_frame_correlation(x) == pytest.approx(oracle_f3(x), abs=1e-12)


# ---- f4 / f6 ---------------------------------------------------------------

def alternating():
    return np.where(np.arange(N) % 2 == 0, 1.0, -1.0)


def test_f4_alternating():
    assert F.f4_kurtosis(alternating()) == pytest.approx(1.0, abs=1e-12)


def test_f4_normal_seed3():
    # oracle: Monte-Carlo mean over many seeds sits at the Gaussian value
    mc = np.mean([F.f4_kurtosis(np.random.default_rng(s).standard_normal(N)) for s in range(500)])
    assert abs(mc - 3.0) < 0.05
    v = F.f4_kurtosis(np.random.default_rng(3).standard_normal(N))
    assert abs(v - 3.0) <= 0.5
    assert v == pytest.approx(stats.kurtosis(np.random.default_rng(3).standard_normal(N), fisher=False), rel=1e-12)


def test_f6_alternating():
    assert F.f6_skewness(alternating()) == pytest.approx(0.0, abs=1e-12)


def test_f6_exponential_seed5():
    mc = np.mean([F.f6_skewness(np.random.default_rng(s).exponential(size=N)) for s in range(500)])
    assert abs(mc - 2.0) < 0.15
    x = np.random.default_rng(5).exponential(size=N)
    assert abs(F.f6_skewness(x) - 2.0) <= 0.6
    assert F.f6_skewness(x) == pytest.approx(abs(stats.skew(x)), rel=1e-12)


@pytest.mark.parametrize("fn", [F.f4_kurtosis, F.f6_skewness])
def test_moments_constant_raise(fn):
    with pytest.raises(F.DegenerateWindowError):
        fn(np.full(N, 0.1))


# ---- f5 --------------------------------------------------------------------

def test_f5_identical_halves():
    h = noise(1, N // 2)
    assert F.f5_concordance(np.concatenate([h, h])) == pytest.approx(1.0, abs=1e-12)


def test_f5_large_shift_goes_to_zero():
    h = noise(1, N // 2)
    vals = [F.f5_concordance(np.concatenate([h, h + d])) for d in (1.0, 10.0, 100.0, 1e4)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-6


def test_f5_noise_matches_oracle():
    x = noise(21)
    assert F.f5_concordance(x) == pytest.approx(oracle_f5(x), abs=1e-12)


def test_f5_constant():
    assert F.f5_concordance(np.full(N, 5.0)) == 0.0


# ---- f7 --------------------------------------------------------------------

def test_f7_ramp():
    assert F.f7_trend_covariance(np.arange(N, dtype=float)) == pytest.approx(1.0, abs=1e-12)


def test_f7_symmetric():
    n = np.arange(N)
    assert F.f7_trend_covariance((n - (N - 1) / 2) ** 2) == pytest.approx(0.0, abs=1e-12)


def test_f7_noise_matches_oracle():
    x = noise(5)
    assert F.f7_trend_covariance(x) == pytest.approx(abs(stats.pearsonr(x, np.arange(N)).statistic), abs=1e-12)


# ---- f8 --------------------------------------------------------------------

def test_f8_clean_step():
    assert F.f8_cramers_v(step(225)) == pytest.approx(1.0, abs=1e-12)
    assert F.f8_cramers_v(noise(3) * 0.01 + step(225, 5.0)) == pytest.approx(1.0, abs=1e-12)


def test_f8_permuted_halves():
    h = noise(2, N // 2)
    x = np.concatenate([h, np.random.default_rng(9).permutation(h)])
    assert F.f8_cramers_v(x) == pytest.approx(0.0, abs=1e-12)


def test_f8_noise_matches_oracle():
    x = noise(8)
    assert F.f8_cramers_v(x) == pytest.approx(oracle_f8(x), abs=1e-12)


def test_f8_quantised_noise_matches_oracle():
    # heavy ties: some octile bins collapse
    x = np.round(noise(8))
    assert F.f8_cramers_v(x) == pytest.approx(oracle_f8(x), abs=1e-12)


def test_f8_constant_and_short():
    assert F.f8_cramers_v(np.ones(N)) == 0.0
    with pytest.raises(ValueError):
        F.f8_cramers_v(np.arange(15.0))


# ---- f9 --------------------------------------------------------------------

def test_f9_monotone():
    assert F.f9_spearman(np.exp(np.linspace(0, 3, N))) == pytest.approx(1.0, abs=1e-12)
    assert F.f9_spearman(-np.arange(N) ** 3.0) == pytest.approx(1.0, abs=1e-12)


def test_f9_constant():
    assert F.f9_spearman(np.zeros(N)) == 0.0


def oracle_rank(x):
    # average ranks via explicit counting
    return np.array([np.sum(x < v) + (np.sum(x == v) + 1) / 2 for v in x])


@pytest.mark.parametrize("quantise", [False, True])
def test_f9_noise_matches_oracle(quantise):
    x = noise(17)
    if quantise:
        x = np.round(x)
    r = oracle_rank(x)
    idx = np.arange(1, N + 1)
    ref = abs(np.corrcoef(r, idx)[0, 1])
    assert F.f9_spearman(x) == pytest.approx(ref, abs=1e-12)
    assert ref == pytest.approx(abs(stats.spearmanr(x, idx).statistic), abs=1e-12)


# ---- extract ---------------------------------------------------------------

ALL = (
    F.f1_step_correlation,
    lambda w: F.f2_kernel_correlation(w, K),
    F.f3_adjacent_frame_correlation,
    F.f4_kurtosis,
    F.f5_concordance,
    F.f6_skewness,
    F.f7_trend_covariance,
    F.f8_cramers_v,
    F.f9_spearman,
)


def test_extract_constant():
    fv = F.extract(np.full(N, 2.0), K)
    assert fv.degenerate
    assert np.array_equal(fv.values[[0, 1, 3, 4, 5, 6, 7, 8]], np.zeros(8))


def test_extract_clean_step():
    fv = F.extract(step(230, 2.0), K)
    assert fv[0] == pytest.approx(1.0, abs=1e-12)
    assert not fv.degenerate


def random_window(seed):
    rng = np.random.default_rng(seed)
    cfg = SynthesisConfig(snr_db=float(rng.uniform(-5, 25)), seed=seed)
    return synth_labeled(cfg, int(rng.integers(2)), bool(rng.integers(2))).window


def test_extract_composition_1000():
    for s in range(1000):
        w = random_window(s)
        fv = F.extract(w, K)
        assert np.array_equal(fv.values, np.array([fn(w) for fn in ALL]))


def test_extract_matrix_rows():
    rows = np.vstack([random_window(s).samples for s in range(5)])
    values, flags = F.extract_matrix(rows, K)
    assert values.shape == (5, 9) and not flags.any()
    assert np.array_equal(values[3], F.extract(rows[3], K).values)


def test_feature_vector_shape():
    with pytest.raises(ValueError):
        F.FeatureVector(np.zeros(8))


# ---- properties ------------------------------------------------------------

windows = st.builds(random_window, st.integers(0, 2**32 - 1))


@given(windows)
def test_range_property(w):
    assert F.in_range(F.extract(w, K).values)


@given(windows, st.floats(1e-3, 1e3))
def test_scale_invariance(w, a):
    x = w.samples
    base = F.extract(x, K).values
    scaled = F.extract(a * x, K).values
    for i in (0, 1, 2, 4, 6, 7, 8):
        assert scaled[i] == pytest.approx(base[i], abs=1e-12)


@given(windows, st.floats(-1e2, 1e2))
def test_offset_invariance(w, b):
    x = w.samples
    base = F.extract(x, K).values
    shifted = F.extract(x + b, K).values
    for i in (0, 3, 4, 5, 6, 8):
        assert shifted[i] == pytest.approx(base[i], rel=1e-12, abs=1e-12)


@given(windows)
def test_kurtosis_time_reversal(w):
    x = w.samples
    assert F.f4_kurtosis(x[::-1]) == pytest.approx(F.f4_kurtosis(x), rel=1e-12)
