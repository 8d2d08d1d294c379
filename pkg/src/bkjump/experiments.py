"""Comparison experiments: ROC comparison, SNR sweep, training-fraction
sweep, feature-subset analysis and single-feature ranking.

Each (method, sweep value, seed) cell is computed independently from
``(cfg, seed)``; per-seed datasets and their features are cached in-process.
"""
from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache

import numpy as np

from . import mlp, svm
from .features import N_FEATURES, extract_matrix
from .kernel import make_kernel, score_windows
from .metrics import RocCurve, max_tp_tn, roc
from .synth import SPLIT_SIZES, SynthesisConfig, build_dataset, generate_split

LEARNERS = ("svm", "mlp")


@dataclass(frozen=True)
class ExperimentSettings:
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    snr_list: tuple[float, ...] = (15.0, 10.0, 5.0, 0.0)
    fractions: tuple[float, ...] = (1.0, 0.75, 0.5, 0.25)
    svm_c_grid: tuple[float, ...] = svm.DEFAULT_C_GRID
    svm_gamma_grid: tuple[float, ...] = svm.DEFAULT_GAMMA_GRID
    svm_tol: float = 1e-3
    svm_max_passes: int = 200
    train: mlp.TrainConfig = field(default_factory=mlp.TrainConfig)
    kernel_sigma: float | None = None
    subset_mode: str = "prefix"

    def __post_init__(self) -> None:
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if self.subset_mode not in ("prefix", "exhaustive"):
            raise ValueError(f"subset_mode must be 'prefix' or 'exhaustive', got {self.subset_mode!r}")
        if self.kernel_sigma is not None and self.kernel_sigma < 1:
            raise ValueError("kernel_sigma must be >= 1")

    def grid(self) -> list[svm.SvmHyperParams]:
        return svm.make_grid(self.svm_c_grid, self.svm_gamma_grid, self.svm_tol, self.svm_max_passes)

    def sigma(self, cfg: SynthesisConfig) -> float:
        return 2.0 * cfg.fs if self.kernel_sigma is None else self.kernel_sigma


@dataclass
class Record:
    method: str
    sweep_value: float
    seed: int
    accuracy: float
    auc: float
    note: str = ""


@dataclass
class ExperimentReport:
    experiment: str
    sweep_name: str
    sweep_values: list
    seeds: list[int]
    config: dict
    records: list[Record] = field(default_factory=list)
    curves: dict = field(default_factory=dict)

    @property
    def methods(self) -> list[str]:
        return list(dict.fromkeys(r.method for r in self.records))

    def values(self, method: str, sweep_value, metric: str = "accuracy") -> list[float]:
        return [getattr(r, metric) for r in self.records if r.method == method and r.sweep_value == sweep_value]

    def median(self, method: str, sweep_value, metric: str = "accuracy") -> float:
        vals = self.values(method, sweep_value, metric)
        if not vals:
            raise KeyError(f"no records for {method!r} at {sweep_value!r}")
        return float(np.median(vals))

    def medians(self, metric: str = "accuracy") -> dict[str, list[float]]:
        return {m: [self.median(m, v, metric) for v in self.sweep_values] for m in self.methods}


@dataclass(eq=False)
class SeedData:
    labels: dict[str, np.ndarray]
    features: dict[str, np.ndarray]


@lru_cache(maxsize=64)
def seed_data(cfg: SynthesisConfig, sigma: float) -> SeedData:
    """Cluttered dataset features for one configuration (cached)."""
    ds = build_dataset(cfg, shielded=False)
    k = make_kernel(sigma, cfg.fs)
    feats = {name: extract_matrix(split.samples, k)[0] for name, split in ds}
    labels = {name: split.labels for name, split in ds}
    for arr in list(feats.values()) + list(labels.values()):
        arr.setflags(write=False)
    return SeedData(labels, feats)


def balanced_indices(labels: np.ndarray, per_class: int) -> np.ndarray:
    """Row indices of the first ``per_class`` windows of each label, in order."""
    keep = np.zeros(labels.size, dtype=bool)
    for lab in (0, 1):
        idx = np.flatnonzero(labels == lab)
        if idx.size < per_class:
            raise ValueError(f"only {idx.size} rows with label {lab}")
        keep[idx[:per_class]] = True
    return np.flatnonzero(keep)


def fit_and_score(
    method: str,
    data: SeedData,
    settings: ExperimentSettings,
    seed: int,
    columns=None,
    fraction: float = 1.0,
) -> np.ndarray:
    """Train one learner on (a subsample of) train/eval and score the test split."""
    cols = list(range(N_FEATURES)) if columns is None else list(columns)
    tr_rows, ev_rows = _fraction_rows(data, fraction)
    x_tr = data.features["train"][np.ix_(tr_rows, cols)]
    y_tr = data.labels["train"][tr_rows]
    x_ev = data.features["eval"][np.ix_(ev_rows, cols)]
    y_ev = data.labels["eval"][ev_rows]
    x_te = data.features["test"][:, cols]
    if method == "svm":
        _, model = svm.grid_search_fit((x_tr, y_tr), (x_ev, y_ev), settings.grid())
        return svm.decision_values(model, x_te)
    if method == "mlp":
        model = mlp.train((x_tr, y_tr), (x_ev, y_ev), replace(settings.train, seed=seed))
        return mlp.scores(model, x_te)
    raise ValueError(f"unknown learner {method!r}")


def _fraction_rows(data: SeedData, fraction: float) -> tuple[np.ndarray, np.ndarray]:
    if not 0 < fraction <= 1:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    n_tr = data.labels["train"].size
    n_ev = data.labels["eval"].size
    if fraction == 1.0:
        return np.arange(n_tr), np.arange(n_ev)
    per_tr = int(round(fraction * n_tr / 2))
    per_ev = max(1, int(round(fraction * n_ev / 2)))
    if 2 * per_tr < 4:
        raise ValueError(f"fraction {fraction} leaves {2 * per_tr} training windows; need at least 4")
    return balanced_indices(data.labels["train"], per_tr), balanced_indices(data.labels["eval"], per_ev)


def run_method(
    cfg: SynthesisConfig,
    method: str,
    settings: ExperimentSettings = ExperimentSettings(),
    seed: int | None = None,
    columns=None,
    fraction: float = 1.0,
) -> tuple[float, float, np.ndarray]:
    """(test max(TP+TN) accuracy, test AUC, test scores) for one learner and seed."""
    seed = cfg.seed if seed is None else seed
    c = replace(cfg, seed=seed)
    data = seed_data(c, settings.sigma(c))
    s = fit_and_score(method, data, settings, seed, columns, fraction)
    y = data.labels["test"]
    return max_tp_tn(s, y)[0], roc(s, y).auc, s


def _snapshot(cfg: SynthesisConfig, settings: ExperimentSettings, **extra) -> dict:
    out = {"synthesis": asdict(cfg), "settings": asdict(settings)}
    out.update(extra)
    return out


def experiment_roc_comparison(
    cfg: SynthesisConfig, seeds=None, settings: ExperimentSettings = ExperimentSettings()
) -> ExperimentReport:
    """Kernel (shielded and cluttered), SVM and MLP ROC on the cluttered test split."""
    seeds = list(settings.seeds if seeds is None else seeds)
    rep = ExperimentReport("roc_comparison", "snr_db", [cfg.snr_db], seeds, _snapshot(cfg, settings))
    for seed in seeds:
        c = replace(cfg, seed=seed)
        sigma = settings.sigma(c)
        k = make_kernel(sigma, c.fs)
        data = seed_data(c, sigma)
        y = data.labels["test"]
        n_test = SPLIT_SIZES["test"]
        scored: dict[str, tuple[np.ndarray, np.ndarray]] = {}
        for shielded, name in ((True, "kernel-shielded"), (False, "kernel-cluttered")):
            split = generate_split(c, "test", n_test, shielded)
            scored[name] = (score_windows(split.samples, k), split.labels)
        for method in LEARNERS:
            scored[f"{method}-cluttered"] = (fit_and_score(method, data, settings, seed), y)
        for name, (s, lab) in scored.items():
            curve = roc(s, lab)
            rep.records.append(Record(name, cfg.snr_db, seed, max_tp_tn(s, lab)[0], curve.auc))
            rep.curves[(name, seed)] = curve
    return rep


def experiment_snr_sweep(
    cfg: SynthesisConfig, snr_list=None, seeds=None, settings: ExperimentSettings = ExperimentSettings()
) -> ExperimentReport:
    snr_list = list(settings.snr_list if snr_list is None else snr_list)
    if not snr_list:
        raise ValueError("snr_list must not be empty")
    seeds = list(settings.seeds if seeds is None else seeds)
    rep = ExperimentReport("snr_sweep", "snr_db", snr_list, seeds, _snapshot(cfg, settings))
    for snr in snr_list:
        for seed in seeds:
            c = replace(cfg, snr_db=float(snr))
            for method in LEARNERS:
                acc, a, _ = run_method(c, method, settings, seed)
                rep.records.append(Record(method, snr, seed, acc, a))
    return rep


def experiment_fraction_sweep(
    cfg: SynthesisConfig, fractions=None, seeds=None, settings: ExperimentSettings = ExperimentSettings()
) -> ExperimentReport:
    """Balanced subsamples of train+eval (same ratio), test split untouched."""
    fractions = list(settings.fractions if fractions is None else fractions)
    seeds = list(settings.seeds if seeds is None else seeds)
    for f in fractions:
        if not 0 < f <= 1:
            raise ValueError(f"fraction must lie in (0, 1], got {f}")
        if 2 * int(round(f * SPLIT_SIZES["train"] / 2)) < 4:
            raise ValueError(f"fraction {f} leaves fewer than 4 training windows")
    rep = ExperimentReport("fraction_sweep", "fraction", fractions, seeds, _snapshot(cfg, settings))
    for f in fractions:
        for seed in seeds:
            for method in LEARNERS:
                acc, a, _ = run_method(cfg, method, settings, seed, fraction=f)
                rep.records.append(Record(method, f, seed, acc, a))
    return rep


def feature_subsets(n: int) -> list[tuple[int, ...]]:
    return list(itertools.combinations(range(N_FEATURES), n))


def experiment_feature_subsets(
    cfg: SynthesisConfig, mode: str | None = None, seeds=None, settings: ExperimentSettings = ExperimentSettings()
) -> ExperimentReport:
    """Accuracy versus feature count.

    ``prefix``: features f1..fi for i = 1..9.  ``exhaustive``: every subset of
    each size n, reporting the best one per size (its members go in ``note``).
    """
    mode = settings.subset_mode if mode is None else mode
    if mode not in ("prefix", "exhaustive"):
        raise ValueError(f"mode must be 'prefix' or 'exhaustive', got {mode!r}")
    seeds = list(settings.seeds if seeds is None else seeds)
    sizes = list(range(1, N_FEATURES + 1))
    rep = ExperimentReport(f"feature_subsets_{mode}", "n_features", sizes, seeds, _snapshot(cfg, settings, mode=mode))
    for n in sizes:
        for seed in seeds:
            for method in LEARNERS:
                subsets = [tuple(range(n))] if mode == "prefix" else feature_subsets(n)
                best = None
                for cols in subsets:
                    acc, a, _ = run_method(cfg, method, settings, seed, columns=cols)
                    if best is None or acc > best[0]:
                        best = (acc, a, cols)
                note = "+".join(f"f{i + 1}" for i in best[2])
                rep.records.append(Record(method, n, seed, best[0], best[1], note))
    return rep


def rank_features(
    cfg: SynthesisConfig, seeds=None, settings: ExperimentSettings = ExperimentSettings()
) -> list[tuple[int, float]]:
    """Features (1-based) by median single-feature MLP test accuracy, best first."""
    seeds = list(settings.seeds if seeds is None else seeds)
    scored = []
    for j in range(N_FEATURES):
        accs = [run_method(cfg, "mlp", settings, seed, columns=(j,))[0] for seed in seeds]
        scored.append((j + 1, float(np.median(accs))))
    return sorted(scored, key=lambda t: (-t[1], t[0]))


def rank_columns(features_by_seed, settings: ExperimentSettings = ExperimentSettings()) -> list[tuple[int, float]]:
    """Same ranking for precomputed ``SeedData`` objects keyed by seed."""
    n_cols = next(iter(features_by_seed.values())).features["train"].shape[1]
    scored = []
    for j in range(n_cols):
        accs = []
        for seed, data in features_by_seed.items():
            s = fit_and_score("mlp", data, settings, seed, columns=(j,))
            accs.append(max_tp_tn(s, data.labels["test"])[0])
        scored.append((j + 1, float(np.median(accs))))
    return sorted(scored, key=lambda t: (-t[1], t[0]))


def roc_of(report: ExperimentReport, method: str, seed: int) -> RocCurve:
    return report.curves[(method, seed)]
