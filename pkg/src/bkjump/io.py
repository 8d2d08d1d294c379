"""Text file formats: window/feature CSVs, model files, run configs, reports.

Floats are written with 17 significant digits so every double round-trips.
All writes go to a temporary file in the target directory, then get renamed.
"""
from __future__ import annotations

import csv
import io as _io
import os
import tempfile
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import mlp, svm
from .experiments import ExperimentReport, ExperimentSettings
from .features import FEATURE_NAMES
from .metrics import RocCurve
from .synth import SPLIT_NAMES, DatasetSplits, Split, SynthesisConfig

MODEL_MAGIC = {"mlp": "BKJ1 MLP", "svm": "BKJ1 SVM"}
MODEL_VERSION = "1"


class FormatError(ValueError):
    """Malformed input file."""


class UnsupportedFormatError(FormatError):
    """Unknown magic line or version."""


class ConfigError(FormatError):
    pass


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def split_path(prefix: str | os.PathLike, split: str) -> Path:
    return Path(f"{prefix}.{split}.csv")


# -- window and feature tables -------------------------------------------------


def _table_text(header: list[str], values: np.ndarray, labels: np.ndarray) -> str:
    buf = _io.StringIO()
    buf.write(",".join(header) + "\n")
    for row, lab in zip(values, labels):
        buf.write(",".join(fmt(v) for v in row) + f",{int(lab)}\n")
    return buf.getvalue()


def _read_table(path: str | os.PathLike, expect_header=None) -> tuple[list[str], np.ndarray, np.ndarray]:
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        if not header or header[-1] != "label":
            raise FormatError(f"{path}, line 1: last column must be 'label'")
        if expect_header is not None and not expect_header(header[:-1]):
            raise FormatError(f"{path}, line 1: unexpected header {header[:3]}...")
        width = len(header)
        rows, labels = [], []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != width:
                raise FormatError(f"{path}, line {lineno}: expected {width} fields, found {len(rec)}")
            try:
                vals = [float(v) for v in rec[:-1]]
                lab = int(rec[-1])
            except ValueError as exc:
                raise FormatError(f"{path}, line {lineno}: {exc}") from None
            if lab not in (0, 1):
                raise FormatError(f"{path}, line {lineno}: label must be 0 or 1, got {lab}")
            if not all(np.isfinite(vals)):
                raise FormatError(f"{path}, line {lineno}: non-finite value")
            rows.append(vals)
            labels.append(lab)
    values = np.array(rows, dtype=float).reshape(len(rows), width - 1)
    return header, values, np.array(labels, dtype=int)


def _is_window_header(cols: list[str]) -> bool:
    return cols == [f"s{i}" for i in range(len(cols))]


def write_windows(path, split: Split) -> None:
    header = [f"s{i}" for i in range(split.samples.shape[1])] + ["label"]
    atomic_write_text(path, _table_text(header, split.samples, split.labels))


def read_windows(path, fs: float = 10.0) -> Split:
    _, values, labels = _read_table(path, _is_window_header)
    return Split(values, labels, fs)


def write_dataset(prefix, ds: DatasetSplits) -> list[Path]:
    """Three files ``<prefix>.train.csv``, ``.eval.csv``, ``.test.csv``."""
    paths = []
    for name, split in ds:
        p = split_path(prefix, name)
        write_windows(p, split)
        paths.append(p)
    return paths


def read_dataset(prefix, fs: float = 10.0) -> DatasetSplits:
    return DatasetSplits(*(read_windows(split_path(prefix, name), fs) for name in SPLIT_NAMES))


def write_features(path, values: np.ndarray, labels: np.ndarray, names=FEATURE_NAMES) -> None:
    values = np.atleast_2d(values)
    atomic_write_text(path, _table_text(list(names[: values.shape[1]]) + ["label"], values, labels))


def read_features(path) -> tuple[np.ndarray, np.ndarray]:
    _, values, labels = _read_table(path, lambda cols: all(c in FEATURE_NAMES for c in cols))
    return values, labels


# -- models --------------------------------------------------------------------


def _vec(xs) -> str:
    return " ".join(fmt(v) for v in np.ravel(xs))


def _standardizer_lines(st: svm.Standardizer) -> list[str]:
    return [
        "standardizer",
        "mean " + _vec(st.mean),
        "std " + _vec(st.std),
        "degenerate " + " ".join(str(int(d)) for d in st.degenerate),
    ]


def model_text(model) -> str:
    if isinstance(model, mlp.MlpModel):
        lines = [MODEL_MAGIC["mlp"], MODEL_VERSION, "layers " + " ".join(map(str, model.layer_sizes))]
        lines.append(f"params {model.n_params}")
        for w, b in zip(model.weights, model.biases):
            lines.extend(_vec(row) for row in w)
            lines.append(_vec(b))
        if model.standardizer is None:
            raise ValueError("only trained models (with a standardizer) can be saved")
    elif isinstance(model, svm.SvmModel):
        hp = model.hyper
        lines = [MODEL_MAGIC["svm"], MODEL_VERSION]
        lines.append(f"hyper {fmt(hp.c)} {fmt(hp.gamma)} {fmt(hp.tol)} {hp.max_passes}")
        lines.append(f"bias {fmt(model.bias)}")
        lines.append(f"support {model.support_vectors.shape[0]} {model.standardizer.mean.size}")
        for coef, sv in zip(model.dual_coefs, model.support_vectors):
            lines.append(fmt(coef) + " " + _vec(sv))
    else:
        raise TypeError(f"cannot save {type(model).__name__}")
    lines.extend(_standardizer_lines(model.standardizer))
    lines.append("end")
    return "\n".join(lines) + "\n"


def save_model(path, model) -> None:
    atomic_write_text(path, model_text(model))


class _Lines:
    def __init__(self, path, text: str):
        self.path = path
        self.lines = text.splitlines()
        self.pos = 0

    def next(self, what: str) -> str:
        if self.pos >= len(self.lines):
            raise FormatError(f"{self.path}: truncated file, expected {what}")
        self.pos += 1
        return self.lines[self.pos - 1]

    def keyed(self, key: str) -> list[str]:
        parts = self.next(key).split()
        if not parts or parts[0] != key:
            raise FormatError(f"{self.path}:{self.pos}: expected '{key}' line")
        return parts[1:]

    def floats(self, what: str, n: int | None = None, parts=None) -> np.ndarray:
        parts = self.next(what).split() if parts is None else parts
        try:
            vals = np.array([float(p) for p in parts])
        except ValueError:
            raise FormatError(f"{self.path}:{self.pos}: bad number in {what}") from None
        if n is not None and vals.size != n:
            raise FormatError(f"{self.path}:{self.pos}: {what} needs {n} values, found {vals.size}")
        return vals


def _read_standardizer(rd: _Lines, d: int) -> svm.Standardizer:
    if rd.next("standardizer").strip() != "standardizer":
        raise FormatError(f"{rd.path}, line {rd.pos}: expected 'standardizer'")
    mean = rd.floats("mean", d, rd.keyed("mean"))
    std = rd.floats("std", d, rd.keyed("std"))
    deg = rd.floats("degenerate", d, rd.keyed("degenerate")).astype(bool)
    return svm.Standardizer(mean, std, deg)


def load_model(path, expect: str | None = None):
    """Read an MLP or SVM model; ``expect`` rejects the other kind."""
    path = Path(path)
    try:
        text = path.read_text()
    except UnicodeDecodeError:
        raise UnsupportedFormatError(f"{path}: not a text model file") from None
    rd = _Lines(path, text)
    magic = rd.next("magic line").strip()
    kind = {v: k for k, v in MODEL_MAGIC.items()}.get(magic)
    if kind is None:
        raise UnsupportedFormatError(f"{path}: unsupported model format {magic!r}")
    version = rd.next("version").strip()
    if version != MODEL_VERSION:
        raise UnsupportedFormatError(f"{path}: unsupported {magic} version {version!r}")
    if expect is not None and kind != expect:
        raise UnsupportedFormatError(f"{path}: expected a {expect.upper()} model, found {magic!r}")
    try:
        model = _read_mlp(rd) if kind == "mlp" else _read_svm(rd)
    except (IndexError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"{path}, line {rd.pos}: {exc}") from None
    if rd.next("end").strip() != "end":
        raise FormatError(f"{path}, line {rd.pos}: expected 'end'")
    return model


def _read_mlp(rd: _Lines) -> mlp.MlpModel:
    sizes = [int(s) for s in rd.keyed("layers")]
    if len(sizes) < 2 or min(sizes) < 1:
        raise FormatError(f"{rd.path}, line {rd.pos}: bad layer sizes {sizes}")
    n = int(rd.keyed("params")[0])
    if n != mlp.n_params(sizes):
        raise FormatError(f"{rd.path}, line {rd.pos}: {n} parameters do not match layers {sizes}")
    ws, bs = [], []
    for a, b in zip(sizes[:-1], sizes[1:]):
        ws.append(np.vstack([rd.floats("weights", b) for _ in range(a)]))
        bs.append(rd.floats("biases", b))
    st = _read_standardizer(rd, sizes[0])
    return mlp.MlpModel(ws, bs, st)


def _read_svm(rd: _Lines) -> svm.SvmModel:
    h = rd.keyed("hyper")
    if len(h) != 4:
        raise FormatError(f"{rd.path}, line {rd.pos}: 'hyper' needs c gamma tol max_passes")
    hp = svm.SvmHyperParams(float(h[0]), float(h[1]), float(h[2]), int(h[3]))
    bias = float(rd.keyed("bias")[0])
    n_sv, d = (int(v) for v in rd.keyed("support"))
    rows = [rd.floats("support vector", d + 1) for _ in range(n_sv)]
    block = np.vstack(rows) if rows else np.empty((0, d + 1))
    st = _read_standardizer(rd, d)
    return svm.SvmModel(block[:, 1:].copy(), block[:, 0].copy(), bias, hp.gamma, st, hp)


# -- run configuration -------------------------------------------------------


def _floats(s: str) -> tuple[float, ...]:
    return tuple(float(v) for v in s.split(",") if v.strip())


def _ints(s: str) -> tuple[int, ...]:
    return tuple(int(v) for v in s.split(",") if v.strip())


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


_SYNTH_KEYS = {
    "fs": float,
    "window_len": int,
    "snr_db": float,
    "jump_amplitude": float,
    "white_noise_rms": float,
    "pink_noise_rms": float,
    "pink_exponent": float,
    "clutter_mix": _floats,
    "rise_len_range": _ints,
    "max_clutter_events": int,
    "seed": int,
}
_TRAIN_KEYS = {
    "learning_rate": ("learning_rate", float),
    "momentum": ("momentum", float),
    "lambda": ("lam", float),
    "max_epochs": ("max_epochs", int),
    "min_grad": ("min_grad", float),
    "dropout_rate": ("dropout_rate", float),
    "init_std": ("init_std", float),
    "train_seed": ("seed", int),
}
_SETTINGS_KEYS = {
    "seeds": ("seeds", _ints),
    "snr_list": ("snr_list", _floats),
    "fractions": ("fractions", _floats),
    "svm_c_grid": ("svm_c_grid", _floats),
    "svm_gamma_grid": ("svm_gamma_grid", _floats),
    "svm_tol": ("svm_tol", float),
    "svm_max_passes": ("svm_max_passes", int),
    "kernel_sigma": ("kernel_sigma", float),
    "subset_mode": ("subset_mode", str),
}
_OTHER_KEYS = {"shielded": _bool}
KNOWN_KEYS = set(_SYNTH_KEYS) | set(_TRAIN_KEYS) | set(_SETTINGS_KEYS) | set(_OTHER_KEYS)


@dataclass
class RunConfig:
    synthesis: SynthesisConfig = field(default_factory=SynthesisConfig)
    train: mlp.TrainConfig = field(default_factory=mlp.TrainConfig)
    settings: ExperimentSettings = field(default_factory=ExperimentSettings)
    shielded: bool = False
    train_seed_set: bool = False

    def train_config(self, seed: int | None = None) -> mlp.TrainConfig:
        """Training config; its seed follows the synthesis seed unless set explicitly."""
        if self.train_seed_set:
            return self.train
        return replace(self.train, seed=self.synthesis.seed if seed is None else seed)


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    """``key = value`` lines; ``#`` starts a comment; unknown keys are errors."""
    synth, train, settings, other = {}, {}, {}, {}
    seen: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}, line {lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"{source}, line {lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"{source}, line {lineno}: duplicate key {key!r} (first on line {seen[key]})")
        seen[key] = lineno
        try:
            if key in _SYNTH_KEYS:
                synth[key] = _SYNTH_KEYS[key](value)
            elif key in _TRAIN_KEYS:
                name, conv = _TRAIN_KEYS[key]
                train[name] = conv(value)
            elif key in _SETTINGS_KEYS:
                name, conv = _SETTINGS_KEYS[key]
                settings[name] = conv(value)
            else:
                other[key] = _OTHER_KEYS[key](value)
        except ValueError as exc:
            raise ConfigError(f"{source}, line {lineno}: bad value for {key!r}: {exc}") from None
    try:
        train_cfg = mlp.TrainConfig(**train)
        settings["train"] = train_cfg
        return RunConfig(
            SynthesisConfig(**synth),
            train_cfg,
            ExperimentSettings(**settings),
            other.get("shielded", False),
            "seed" in train,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path) -> RunConfig:
    path = Path(path)
    return parse_config(path.read_text(), str(path))


def config_text(rc: RunConfig) -> str:
    """Inverse of ``parse_config`` for every setting."""
    s = rc.synthesis
    lines = []
    for f in fields(s):
        v = getattr(s, f.name)
        lines.append(f"{f.name} = {','.join(map(str, v)) if isinstance(v, tuple) else v}")
    inv_train = {name: key for key, (name, _) in _TRAIN_KEYS.items()}
    for f in fields(rc.train):
        if f.name == "seed" and not rc.train_seed_set:
            continue
        lines.append(f"{inv_train[f.name]} = {getattr(rc.train, f.name)}")
    inv_set = {name: key for key, (name, _) in _SETTINGS_KEYS.items()}
    for f in fields(rc.settings):
        if f.name not in inv_set:
            continue
        v = getattr(rc.settings, f.name)
        if v is None:
            continue
        lines.append(f"{inv_set[f.name]} = {','.join(map(str, v)) if isinstance(v, tuple) else v}")
    lines.append(f"shielded = {str(rc.shielded).lower()}")
    return "\n".join(lines) + "\n"


# -- reports and plots -----------------------------------------------------------


def report_csv(rep: ExperimentReport) -> str:
    buf = _io.StringIO()
    buf.write("experiment,method,sweep_name,sweep_value,seed,accuracy,auc,note\n")
    for r in rep.records:
        buf.write(
            f"{rep.experiment},{r.method},{rep.sweep_name},{r.sweep_value},{r.seed},"
            f"{fmt(r.accuracy)},{fmt(r.auc)},{r.note}\n"
        )
    return buf.getvalue()


def write_report(prefix, rep: ExperimentReport, metric: str = "accuracy") -> list[Path]:
    csv_path = Path(f"{prefix}.csv")
    svg_path = Path(f"{prefix}.svg")
    atomic_write_text(csv_path, report_csv(rep))
    xs = [float(v) for v in rep.sweep_values]
    series = {m: (xs, ys) for m, ys in rep.medians(metric).items()}
    atomic_write_text(svg_path, svg_lines(series, rep.sweep_name, f"median {metric}", rep.experiment))
    paths = [csv_path, svg_path]
    if rep.curves:
        roc_path = Path(f"{prefix}.roc.csv")
        atomic_write_text(roc_path, curves_csv({f"{m}@{s}": c for (m, s), c in rep.curves.items()}))
        paths.append(roc_path)
    return paths


def curves_csv(curves: dict[str, RocCurve]) -> str:
    buf = _io.StringIO()
    buf.write("curve,threshold,fpr,tpr\n")
    for name, c in curves.items():
        for t, f, p in c.points:
            buf.write(f"{name},{fmt(t)},{fmt(f)},{fmt(p)}\n")
    return buf.getvalue()


def svg_lines(series: dict, xlabel: str, ylabel: str, title: str = "", width: int = 480, height: int = 360) -> str:
    """Polyline chart; ``series`` maps a name to (xs, ys)."""
    pad = 50
    all_x = [x for xs, _ in series.values() for x in xs] or [0.0, 1.0]
    all_y = [y for _, ys in series.values() for y in ys if np.isfinite(y)] or [0.0, 1.0]
    x0, x1 = min(all_x), max(all_x)
    y0, y1 = min(min(all_y), 0.0), max(max(all_y), 1.0)
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1

    def px(x, y):
        return (
            pad + (x - x0) / (x1 - x0) * (width - 2 * pad),
            height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad),
        )

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"]
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2}" y="18" text-anchor="middle">{title}</text>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{width / 2}" y="{height - 12}" text-anchor="middle">{xlabel}</text>',
        f'<text x="14" y="{height / 2}" text-anchor="middle" transform="rotate(-90 14 {height / 2})">{ylabel}</text>',
        f'<text x="{pad}" y="{height - pad + 14}" text-anchor="middle">{x0:g}</text>',
        f'<text x="{width - pad}" y="{height - pad + 14}" text-anchor="middle">{x1:g}</text>',
        f'<text x="{pad - 4}" y="{height - pad}" text-anchor="end">{y0:g}</text>',
        f'<text x="{pad - 4}" y="{pad + 4}" text-anchor="end">{y1:g}</text>',
    ]
    for i, (name, (xs, ys)) in enumerate(series.items()):
        color = colors[i % len(colors)]
        pts = " ".join("{:.2f},{:.2f}".format(*px(x, y)) for x, y in zip(xs, ys) if np.isfinite(y))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        out.append(f'<text x="{width - pad + 4}" y="{pad + 14 * i}" fill="{color}">{name}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def roc_svg(curves: dict[str, RocCurve], title: str = "ROC") -> str:
    series = {name: (c.fpr.tolist(), c.tpr.tolist()) for name, c in curves.items()}
    return svg_lines(series, "false positive rate", "true positive rate", title)
