"""Soft-margin RBF support vector machine trained with SMO.

The solver works on the dual in LIBSVM's minimisation form

    min_a  1/2 a'Qa - e'a,   Q_ij = y_i y_j K(x_i, x_j),
    s.t.   0 <= a_i <= C,    y'a = 0,

picking the working pair with second-order information (Fan, Chen and Lin,
JMLR 2005) and stopping when the maximal KKT violation gap drops below ``tol``.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np

from .metrics import max_tp_tn

DEFAULT_C_GRID = (0.1, 1.0, 10.0, 100.0)
DEFAULT_GAMMA_GRID = (0.01, 0.1, 1.0, 10.0)
_TAU = 1e-12


class ConvergenceWarning(UserWarning):
    pass


@dataclass(eq=False)
class Standardizer:
    mean: np.ndarray
    std: np.ndarray
    degenerate: np.ndarray

    def apply(self, x) -> np.ndarray:
        return (np.ascontiguousarray(x, dtype=float) - self.mean) / self.std


def fit_standardizer(x) -> Standardizer:
    """Per-column mean and population std; constant columns keep std 1."""
    # C order fixes the summation order, so equal values give equal statistics
    x = np.ascontiguousarray(np.atleast_2d(np.asarray(x, dtype=float)))
    if x.shape[0] < 2:
        raise ValueError("need at least two rows to standardize")
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    degenerate = ~(std > 0)
    std = np.where(degenerate, 1.0, std)
    return Standardizer(mean, std, degenerate)


def apply_standardizer(st: Standardizer, x) -> np.ndarray:
    return st.apply(x)


@dataclass(frozen=True)
class SvmHyperParams:
    c: float = 1.0
    gamma: float = 0.1
    tol: float = 1e-3
    max_passes: int = 200

    def __post_init__(self) -> None:
        if not (self.c > 0 and self.gamma > 0 and self.tol > 0):
            raise ValueError(f"c, gamma and tol must be positive: {self}")
        if self.max_passes < 1:
            raise ValueError("max_passes must be >= 1")


@dataclass(eq=False)
class SvmModel:
    support_vectors: np.ndarray
    dual_coefs: np.ndarray
    bias: float
    gamma: float
    standardizer: Standardizer
    hyper: SvmHyperParams = field(default_factory=SvmHyperParams)
    alphas: np.ndarray | None = None
    converged: bool = True
    n_iter: int = 0


def rbf_kernel(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    return np.exp(-gamma * _sq_dists(a, b))


def _sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # explicit differences rather than the |a|^2 + |b|^2 - 2ab expansion:
    # no cancellation, and each entry is independent of batch shape and
    # memory layout (BLAS blocking would change the last bits)
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    diff = a[:, None, :] - b[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _signed_labels(labels) -> np.ndarray:
    y = np.asarray(labels).ravel()
    vals = set(np.unique(y).tolist())
    if vals <= {0, 1}:
        y = np.where(y == 1, 1.0, -1.0)
    elif vals <= {-1, 1}:
        y = y.astype(float)
    else:
        raise ValueError(f"labels must be binary, got values {sorted(vals)}")
    if np.unique(y).size < 2:
        raise ValueError("both classes must be present")
    return y


@dataclass
class SmoResult:
    alphas: np.ndarray
    bias: float
    converged: bool
    n_iter: int
    objective: list[float] = field(default_factory=list)


def smo_solve(
    kmat: np.ndarray,
    y: np.ndarray,
    c: float,
    tol: float,
    max_iter: int,
    track_objective: bool = False,
) -> SmoResult:
    """Dual solution for a precomputed kernel matrix and labels in {-1, +1}."""
    n = y.size
    alpha = np.zeros(n)
    grad = -np.ones(n)  # Q a - e
    diag = np.diag(kmat).copy()
    pos = y > 0
    history = [0.0] if track_objective else []
    converged = False
    it = 0
    while it < max_iter:
        at_upper = alpha >= c
        at_lower = alpha <= 0
        up = np.where(pos, ~at_upper, ~at_lower)
        low = np.where(pos, ~at_lower, ~at_upper)
        v = -y * grad
        v_up = np.where(up, v, -np.inf)
        i = int(np.argmax(v_up))
        m = v_up[i]
        v_low = np.where(low, v, np.inf)
        if m - v_low.min() < tol:
            converged = True
            break
        b = m - v
        cand = low & (b > 0)
        a = diag[i] + diag - 2.0 * kmat[i]
        a = np.where(a > 0, a, _TAU)
        gain = np.where(cand, b * b / a, -np.inf)
        j = int(np.argmax(gain))

        lam = b[j] / a[j]
        lam = min(lam, c - alpha[i] if pos[i] else alpha[i])
        lam = min(lam, alpha[j] if pos[j] else c - alpha[j])
        alpha[i] += y[i] * lam
        alpha[j] -= y[j] * lam
        for t in (i, j):
            if alpha[t] < 1e-14 * c:
                alpha[t] = 0.0
            elif alpha[t] > c * (1 - 1e-14):
                alpha[t] = c
        grad += lam * y * (kmat[:, i] - kmat[:, j])
        it += 1
        if track_objective:
            history.append(_dual_objective(alpha, grad))

    v = -y * grad
    free = (alpha > 0) & (alpha < c)
    if np.any(free):
        bias = float(np.mean(v[free]))
    else:
        up = np.where(pos, alpha < c, alpha > 0)
        low = np.where(pos, alpha > 0, alpha < c)
        hi = v[up].max() if np.any(up) else 0.0
        lo = v[low].min() if np.any(low) else 0.0
        bias = float((hi + lo) / 2.0)
    return SmoResult(alpha, bias, converged, it, history)


def _dual_objective(alpha: np.ndarray, grad: np.ndarray) -> float:
    # sum(a) - 1/2 a'Qa, using grad = Qa - e
    return float(np.sum(alpha) - 0.5 * alpha @ (grad + 1.0))


def dual_objective(alpha: np.ndarray, kmat: np.ndarray, y: np.ndarray) -> float:
    ay = alpha * y
    return float(np.sum(alpha) - 0.5 * ay @ kmat @ ay)


def train_smo(features, labels, hp: SvmHyperParams, standardizer: Standardizer | None = None) -> SvmModel:
    """Fit on raw feature rows; the standardizer is fitted here unless supplied."""
    x = np.atleast_2d(np.asarray(features, dtype=float))
    y = _signed_labels(labels)
    if x.shape[0] != y.size or y.size < 2:
        raise ValueError("need at least two rows with one label each")
    st = fit_standardizer(x) if standardizer is None else standardizer
    xs = st.apply(x)
    kmat = rbf_kernel(xs, xs, hp.gamma)
    return _fit_from_kernel(xs, y, kmat, hp, st)


def _fit_from_kernel(xs, y, kmat, hp: SvmHyperParams, st: Standardizer) -> SvmModel:
    res = smo_solve(kmat, y, hp.c, hp.tol, hp.max_passes * y.size)
    if not res.converged:
        warnings.warn(
            f"SMO stopped after {res.n_iter} iterations without reaching tol={hp.tol} (C={hp.c}, gamma={hp.gamma})",
            ConvergenceWarning,
            stacklevel=3,
        )
    sv = res.alphas > 0
    return SvmModel(
        support_vectors=xs[sv].copy(),
        dual_coefs=(res.alphas * y)[sv],
        bias=res.bias,
        gamma=hp.gamma,
        standardizer=st,
        hyper=hp,
        alphas=res.alphas,
        converged=res.converged,
        n_iter=res.n_iter,
    )


def decision_values(m: SvmModel, features) -> np.ndarray:
    xs = m.standardizer.apply(np.atleast_2d(np.asarray(features, dtype=float)))
    if m.support_vectors.shape[0] == 0:
        return np.full(xs.shape[0], m.bias)
    return np.einsum("ij,j->i", rbf_kernel(xs, m.support_vectors, m.gamma), m.dual_coefs) + m.bias


def decision_value(m: SvmModel, f) -> float:
    return float(decision_values(m, getattr(f, "values", f))[0])


def predict(m: SvmModel, f) -> int:
    return int(decision_value(m, f) >= 0)


def predict_many(m: SvmModel, features) -> np.ndarray:
    return (decision_values(m, features) >= 0).astype(int)


def default_grid(tol: float = 1e-3, max_passes: int = 200) -> list[SvmHyperParams]:
    return make_grid(DEFAULT_C_GRID, DEFAULT_GAMMA_GRID, tol, max_passes)


def make_grid(cs, gammas, tol: float = 1e-3, max_passes: int = 200) -> list[SvmHyperParams]:
    return [SvmHyperParams(c, g, tol, max_passes) for c, g in itertools.product(cs, gammas)]


def grid_search_fit(train, eval_, grid) -> tuple[SvmHyperParams, SvmModel]:
    """Best (C, gamma) by eval-split max(TP+TN), with its fitted model.

    ``train`` and ``eval_`` are ``(features, labels)`` pairs.  Ties go to the
    smaller C, then the smaller gamma.
    """
    grid = sorted(grid, key=lambda h: (h.c, h.gamma))
    if not grid:
        raise ValueError("empty hyperparameter grid")
    x_tr, y_tr = train
    x_ev, y_ev = eval_
    x = np.atleast_2d(np.asarray(x_tr, dtype=float))
    y = _signed_labels(y_tr)
    st = fit_standardizer(x)
    xs = st.apply(x)
    d2 = _sq_dists(xs, xs)
    kernels: dict[float, np.ndarray] = {}
    best: tuple[float, SvmHyperParams, SvmModel] | None = None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        for hp in grid:
            if hp.gamma not in kernels:
                kernels[hp.gamma] = np.exp(-hp.gamma * d2)
            model = _fit_from_kernel(xs, y, kernels[hp.gamma], hp, st)
            acc, _ = max_tp_tn(decision_values(model, x_ev), y_ev)
            if best is None or acc > best[0]:
                best = (acc, hp, model)
    return best[1], best[2]


def grid_search(train, eval_, grid) -> SvmHyperParams:
    return grid_search_fit(train, eval_, grid)[0]
