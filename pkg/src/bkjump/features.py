"""The nine per-window features fed to both learning detectors.

Order and ranges:

====  ==========================================  ========
f1    max |Pearson| with a unit step                [0, 1]
f2    max |normalised xcorr| with the DoG kernel    [0, 1]
f3    min |cosine| between adjacent frames          [0, 1]
f4    kurtosis m4 / m2^2                            [0, inf)
f5    |concordance| of first vs second half         [0, 1]
f6    |skewness| |m3| / m2^1.5                      [0, inf)
f7    |Pearson| with the time index                 [0, 1]
f8    Cramer's V of half x amplitude octile         [0, 1]
f9    |Spearman| with the time index                [0, 1]
====  ==========================================  ========

Only samples of the given window are used.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.stats import rankdata

from .kernel import DogKernel, default_kernel

N_FEATURES = 9
FEATURE_NAMES = tuple(f"f{i}" for i in range(1, N_FEATURES + 1))
FEATURE_RANGES = (
    (0.0, 1.0),
    (0.0, 1.0),
    (0.0, 1.0),
    (0.0, np.inf),
    (0.0, 1.0),
    (0.0, np.inf),
    (0.0, 1.0),
    (0.0, 1.0),
    (0.0, 1.0),
)
N_FRAMES = 10
N_LEVEL_BINS = 8


class DegenerateWindowError(ValueError):
    """The window has zero variance, so a moment ratio is undefined."""


@dataclass(eq=False)
class FeatureVector:
    values: np.ndarray
    degenerate: bool = False

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (N_FEATURES,):
            raise ValueError(f"expected {N_FEATURES} features, got shape {self.values.shape}")

    def __getitem__(self, i: int) -> float:
        return float(self.values[i])


def _x(w) -> np.ndarray:
    return np.asarray(getattr(w, "samples", w), dtype=float)


def _is_constant(x: np.ndarray) -> bool:
    return x.size == 0 or x.max() == x.min()


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    ac = a - a.mean()
    bc = b - b.mean()
    den = np.sqrt(np.dot(ac, ac) * np.dot(bc, bc))
    if den == 0:
        return 0.0
    return float(np.dot(ac, bc) / den)


def _clip_unit(v: float) -> float:
    return float(min(max(v, 0.0), 1.0))


def f1_step_correlation(w) -> float:
    x = _x(w)
    n = x.size
    if n < 50:
        raise ValueError("window shorter than 50 samples")
    if _is_constant(x):
        return 0.0
    xc = x - x.mean()
    ss = np.dot(xc, xc)
    if ss == 0:
        return 0.0
    taus = np.arange(n // 10, (9 * n) // 10 + 1)
    # sum of centered samples from tau to the end
    tail = np.cumsum(xc[::-1])[::-1]
    p = (n - taus) / n
    r = tail[taus] / np.sqrt(ss * n * p * (1 - p))
    return _clip_unit(np.max(np.abs(r)))


def f2_kernel_correlation(w, k: DogKernel | None = None) -> float:
    k = default_kernel() if k is None else k
    x = _x(w)
    taps = k.taps
    if taps.size > x.size:
        raise ValueError("kernel support exceeds window length")
    xm = x - x.mean()
    segs = sliding_window_view(xm, taps.size)
    dots = segs @ taps
    norms = np.sqrt(np.einsum("ij,ij->i", segs, segs)) * np.linalg.norm(taps)
    ok = norms > 0
    if not np.any(ok):
        return 0.0
    return _clip_unit(np.max(np.abs(dots[ok]) / norms[ok]))


def f3_adjacent_frame_correlation(w, n_frames: int = N_FRAMES) -> float:
    x = _x(w)
    flen = x.size // n_frames
    if n_frames < 2 or flen < 1:
        raise ValueError("window cannot be split into at least two frames")
    frames = x[: n_frames * flen].reshape(n_frames, flen)
    norms = np.linalg.norm(frames, axis=1)
    dots = np.einsum("ij,ij->i", frames[:-1], frames[1:])
    den = norms[:-1] * norms[1:]
    cos = np.zeros(n_frames - 1)
    nz = den > 0
    cos[nz] = np.abs(dots[nz]) / den[nz]
    return _clip_unit(cos.min())


def _central_moments(x: np.ndarray) -> tuple[float, float, float]:
    if _is_constant(x):
        raise DegenerateWindowError("zero-variance window")
    xc = x - x.mean()
    sq = xc * xc
    m2 = sq.mean()
    if m2 == 0:
        raise DegenerateWindowError("zero-variance window")
    return m2, float(np.mean(sq * xc)), float(np.mean(sq * sq))


def f4_kurtosis(w) -> float:
    m2, _, m4 = _central_moments(_x(w))
    return float(m4 / m2**2)


def f5_concordance(w) -> float:
    x = _x(w)
    h = x.size // 2
    a, b = x[:h], x[h : 2 * h]
    ma, mb = a.mean(), b.mean()
    ac, bc = a - ma, b - mb
    cov = np.mean(ac * bc)
    den = np.mean(ac * ac) + np.mean(bc * bc) + (ma - mb) ** 2
    if den == 0:
        return 0.0
    return _clip_unit(abs(2 * cov / den))


def f6_skewness(w) -> float:
    m2, m3, _ = _central_moments(_x(w))
    return float(abs(m3) / m2**1.5)


def f7_trend_covariance(w) -> float:
    x = _x(w)
    if _is_constant(x):
        return 0.0
    return _clip_unit(abs(_pearson(x, np.arange(x.size, dtype=float))))


def f8_cramers_v(w, n_bins: int = N_LEVEL_BINS) -> float:
    x = _x(w)
    n = x.size
    if n < 16:
        raise ValueError("window shorter than 16 samples")
    if _is_constant(x):
        return 0.0
    edges = np.quantile(x, np.arange(1, n_bins) / n_bins)
    bins = np.searchsorted(edges, x, side="right")
    half = np.arange(n) >= n // 2
    table = np.zeros((2, n_bins))
    np.add.at(table, (half.astype(int), bins), 1.0)
    table = table[:, table.sum(axis=0) > 0]
    if table.shape[1] < 2:
        return 0.0
    expected = table.sum(axis=1, keepdims=True) * table.sum(axis=0, keepdims=True) / n
    chi2 = np.sum((table - expected) ** 2 / expected)
    return _clip_unit(np.sqrt(chi2 / n))


def f9_spearman(w) -> float:
    x = _x(w)
    if _is_constant(x):
        return 0.0
    return _clip_unit(abs(_pearson(rankdata(x), np.arange(1, x.size + 1, dtype=float))))


def extract(w, k: DogKernel | None = None) -> FeatureVector:
    """f1..f9 of one window; zero-variance moment features become 0 and set ``degenerate``."""
    k = default_kernel() if k is None else k
    degenerate = False
    moments = []
    for fn in (f4_kurtosis, f6_skewness):
        try:
            moments.append(fn(w))
        except DegenerateWindowError:
            moments.append(0.0)
            degenerate = True
    values = [
        f1_step_correlation(w),
        f2_kernel_correlation(w, k),
        f3_adjacent_frame_correlation(w),
        moments[0],
        f5_concordance(w),
        moments[1],
        f7_trend_covariance(w),
        f8_cramers_v(w),
        f9_spearman(w),
    ]
    return FeatureVector(np.array(values), degenerate)


def extract_matrix(samples: np.ndarray, k: DogKernel | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Features of every row; returns (n, 9) values and the (n,) degeneracy flags."""
    k = default_kernel() if k is None else k
    rows = [extract(row, k) for row in np.atleast_2d(samples)]
    if not rows:
        return np.empty((0, N_FEATURES)), np.empty(0, dtype=bool)
    return np.vstack([r.values for r in rows]), np.array([r.degenerate for r in rows])


def in_range(values: np.ndarray) -> bool:
    v = np.atleast_2d(values)
    lo = np.array([r[0] for r in FEATURE_RANGES])
    hi = np.array([r[1] for r in FEATURE_RANGES])
    return bool(np.all(np.isfinite(v)) and np.all(v >= lo) and np.all(v <= hi))
