"""Synthetic single-axis magnetometer windows.

Background is white plus spectrally shaped 1/f noise; cluttered windows add
up to ``max_clutter_events`` jump-mimicking disturbances (ramp, boxcar, spike,
sinusoid).  Label-1 windows carry one dc jump whose height is set so that
``20*log10(amp / rms(disturbance)) == snr_db``.

Every window is drawn from its own ``SeedSequence`` child keyed by
``(split, index)``, so split sizes never perturb each other.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

CLUTTER_KINDS = ("ramp", "boxcar", "spike", "sinusoid")
SPLIT_NAMES = ("train", "eval", "test")
SPLIT_SIZES = {"train": 600, "eval": 100, "test": 100}


@dataclass(frozen=True)
class SynthesisConfig:
    """Generator settings.

    ``jump_amplitude`` is the nominal field step in nT: it scales the clutter
    amplitudes and is the step height used when the disturbance is exactly
    zero.  Otherwise the step height follows from ``snr_db``.
    """

    fs: float = 10.0
    window_len: int = 450
    snr_db: float = 15.0
    jump_amplitude: float = 1.0
    white_noise_rms: float = 0.1
    pink_noise_rms: float = 0.1
    pink_exponent: float = 1.0
    clutter_mix: tuple[float, float, float, float] = (0.2, 0.4, 0.2, 0.2)
    rise_len_range: tuple[int, int] = (1, 10)
    max_clutter_events: int = 2
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "clutter_mix", tuple(float(p) for p in self.clutter_mix))
        object.__setattr__(self, "rise_len_range", tuple(int(r) for r in self.rise_len_range))
        if not self.fs > 0:
            raise ValueError(f"fs must be positive, got {self.fs}")
        if self.window_len < 50:
            raise ValueError(f"window_len must be >= 50, got {self.window_len}")
        if self.white_noise_rms < 0 or self.pink_noise_rms < 0:
            raise ValueError("noise amplitudes must be nonnegative")
        if self.jump_amplitude < 0:
            raise ValueError("jump_amplitude must be nonnegative")
        mix = np.asarray(self.clutter_mix)
        if mix.shape != (4,) or np.any(mix < 0) or abs(mix.sum() - 1.0) > 1e-9:
            raise ValueError(f"clutter_mix must be 4 nonnegative weights summing to 1, got {self.clutter_mix}")
        lo, hi = self.rise_len_range
        if not (1 <= lo <= hi <= self.window_len / 10):
            raise ValueError(f"rise_len_range must lie within [1, window_len/10], got {self.rise_len_range}")
        if self.max_clutter_events < 0:
            raise ValueError("max_clutter_events must be nonnegative")


@dataclass(eq=False)
class TimeWindow:
    samples: np.ndarray
    fs: float = 10.0

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 1:
            raise ValueError("a window is one-dimensional")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("window samples must be finite")

    def __len__(self) -> int:
        return self.samples.size


@dataclass(eq=False)
class LabeledWindow:
    window: TimeWindow
    label: int
    jump_index: int | None = None
    jump_amplitude: float = 0.0
    disturbance_rms: float = 0.0

    def __post_init__(self) -> None:
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label}")


@dataclass(eq=False)
class Split:
    """A block of equal-length windows, one per row."""

    samples: np.ndarray
    labels: np.ndarray
    fs: float = 10.0

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        if self.samples.ndim != 2 or self.samples.shape[0] != self.labels.shape[0]:
            raise ValueError("samples must be (n, window_len) with one label per row")

    def __len__(self) -> int:
        return self.labels.size

    def __getitem__(self, i: int) -> LabeledWindow:
        return LabeledWindow(TimeWindow(self.samples[i], self.fs), int(self.labels[i]))

    def __iter__(self) -> Iterator[LabeledWindow]:
        return (self[i] for i in range(len(self)))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Split):
            return NotImplemented
        return (
            self.fs == other.fs
            and np.array_equal(self.samples, other.samples)
            and np.array_equal(self.labels, other.labels)
        )

    def subset(self, per_class: int) -> "Split":
        """First ``per_class`` windows of each label, original order kept."""
        keep = np.zeros(len(self), dtype=bool)
        for lab in (0, 1):
            idx = np.flatnonzero(self.labels == lab)
            if idx.size < per_class:
                raise ValueError(f"only {idx.size} windows with label {lab}, asked for {per_class}")
            keep[idx[:per_class]] = True
        return Split(self.samples[keep], self.labels[keep], self.fs)


@dataclass(eq=False)
class DatasetSplits:
    train: Split
    eval: Split
    test: Split
    meta: dict = field(default_factory=dict)

    def __iter__(self) -> Iterator[tuple[str, Split]]:
        return iter((("train", self.train), ("eval", self.eval), ("test", self.test)))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DatasetSplits):
            return NotImplemented
        return self.train == other.train and self.eval == other.eval and self.test == other.test


def _rng(cfg: SynthesisConfig, rng: np.random.Generator | None) -> np.random.Generator:
    return np.random.default_rng(cfg.seed) if rng is None else rng


def rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(x))))


def measure_snr(jump_amp: float, disturbance: TimeWindow | np.ndarray) -> float:
    """SNR in dB of a step of height ``jump_amp`` over a disturbance."""
    x = disturbance.samples if isinstance(disturbance, TimeWindow) else np.asarray(disturbance, float)
    r = rms(x)
    if r == 0:
        raise ZeroDivisionError("disturbance has zero RMS")
    return 20.0 * np.log10(abs(jump_amp) / r)


def pink_noise(n: int, exponent: float, rng: np.random.Generator) -> np.ndarray:
    """Zero-mean unit-RMS noise with power spectrum ~ 1/f**exponent."""
    spectrum = np.fft.rfft(rng.standard_normal(n))
    freqs = np.fft.rfftfreq(n)
    spectrum[0] = 0.0
    spectrum[1:] /= freqs[1:] ** (exponent / 2.0)
    y = np.fft.irfft(spectrum, n)
    s = y.std()
    return y / s if s > 0 else y


def gen_background(
    cfg: SynthesisConfig, shielded: bool, rng: np.random.Generator | None = None
) -> TimeWindow:
    """Sensor noise, plus 0..max_clutter_events clutter events when not shielded."""
    rng = _rng(cfg, rng)
    n = cfg.window_len
    x = cfg.white_noise_rms * rng.standard_normal(n)
    if cfg.pink_noise_rms > 0:
        x = x + cfg.pink_noise_rms * pink_noise(n, cfg.pink_exponent, rng)
    if not shielded:
        x = x + _clutter_sum(cfg, rng)
    return TimeWindow(x, cfg.fs)


def _clutter_sum(cfg: SynthesisConfig, rng: np.random.Generator) -> np.ndarray:
    out = np.zeros(cfg.window_len)
    n_events = int(rng.integers(0, cfg.max_clutter_events + 1))
    for _ in range(n_events):
        kind = CLUTTER_KINDS[int(rng.choice(4, p=cfg.clutter_mix))]
        out += render_clutter(cfg, kind, draw_clutter_params(cfg, kind, rng))
    return out


def draw_clutter_params(cfg: SynthesisConfig, kind: str, rng: np.random.Generator) -> dict:
    """Random shape parameters for one clutter event of the given kind."""
    n, a = cfg.window_len, cfg.jump_amplitude
    sign = 1.0 if rng.random() < 0.5 else -1.0
    if kind == "ramp":
        # total drift capped at half the nominal jump so label-0 stays unambiguous
        drift = sign * rng.uniform(0.1, 0.5) * a
        return {"slope": drift / (n - 1)}
    if kind == "boxcar":
        lo, hi = n // 10, (9 * n) // 10
        width = int(rng.integers(n // 20, (2 * n) // 5 + 1))
        start = int(rng.integers(lo, hi - width + 1))
        return {"start": start, "stop": start + width, "amplitude": sign * rng.uniform(0.5, 2.0) * a}
    if kind == "spike":
        width = int(rng.integers(1, 4))
        return {
            "index": int(rng.integers(0, n - width + 1)),
            "width": width,
            "amplitude": sign * rng.uniform(1.0, 3.0) * a,
        }
    if kind == "sinusoid":
        return {
            "cycles": rng.uniform(0.5, 3.0),
            "phase": rng.uniform(0.0, 2 * np.pi),
            "amplitude": rng.uniform(0.3, 1.0) * a,
        }
    raise ValueError(f"unknown clutter kind {kind!r}; expected one of {CLUTTER_KINDS}")


def render_clutter(cfg: SynthesisConfig, kind: str, params: dict) -> np.ndarray:
    n = cfg.window_len
    t = np.arange(n)
    if kind == "ramp":
        return params["slope"] * t
    if kind == "boxcar":
        x = np.zeros(n)
        x[params["start"] : params["stop"]] = params["amplitude"]
        return x
    if kind == "spike":
        x = np.zeros(n)
        x[params["index"] : params["index"] + params["width"]] = params["amplitude"]
        return x
    if kind == "sinusoid":
        return params["amplitude"] * np.sin(2 * np.pi * params["cycles"] * t / n + params["phase"])
    raise ValueError(f"unknown clutter kind {kind!r}; expected one of {CLUTTER_KINDS}")


def gen_clutter(cfg: SynthesisConfig, kind: str, rng: np.random.Generator | None = None) -> TimeWindow:
    if kind not in CLUTTER_KINDS:
        raise ValueError(f"unknown clutter kind {kind!r}; expected one of {CLUTTER_KINDS}")
    rng = _rng(cfg, rng)
    return TimeWindow(render_clutter(cfg, kind, draw_clutter_params(cfg, kind, rng)), cfg.fs)


def gen_jump(
    cfg: SynthesisConfig,
    t0: int,
    amp: float,
    rng: np.random.Generator | None = None,
    rise_len: int | None = None,
) -> TimeWindow:
    """A permanent level shift: 0 up to ``t0``, linear rise, then ``amp``.

    ``samples[t0 + k] = amp * k / rise_len`` for ``0 <= k <= rise_len``.
    """
    n = cfg.window_len
    if not 0 < t0 < n - cfg.rise_len_range[1]:
        raise ValueError(f"t0={t0} outside (0, {n - cfg.rise_len_range[1]})")
    if rise_len is None:
        lo, hi = cfg.rise_len_range
        rise_len = int(_rng(cfg, rng).integers(lo, hi + 1))
    if rise_len < 1:
        raise ValueError("rise_len must be >= 1")
    k = np.arange(n) - t0
    x = amp * np.clip(k / rise_len, 0.0, 1.0)
    return TimeWindow(x, cfg.fs)


def jump_index_range(cfg: SynthesisConfig) -> tuple[int, int]:
    """Inclusive range of jump onsets used for label-1 windows."""
    n = cfg.window_len
    return n // 10, (9 * n) // 10 - cfg.rise_len_range[1]


def _as_seed_sequence(seed: int | np.random.SeedSequence | None, cfg: SynthesisConfig) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(cfg.seed if seed is None else seed)


def synth_labeled(
    cfg: SynthesisConfig,
    label: int,
    shielded: bool,
    seed: int | np.random.SeedSequence | None = None,
) -> LabeledWindow:
    """One labeled window.

    Noise, clutter and jump draws use separate child streams, so the shielded
    and cluttered versions of a window share the same sensor noise and jump
    onset.
    """
    if label not in (0, 1):
        raise ValueError(f"label must be 0 or 1, got {label}")
    noise_ss, clutter_ss, jump_ss = _as_seed_sequence(seed, cfg).spawn(3)
    disturbance = gen_background(cfg, True, np.random.default_rng(noise_ss)).samples
    if not shielded:
        disturbance = disturbance + _clutter_sum(cfg, np.random.default_rng(clutter_ss))
    d_rms = rms(disturbance)
    if label == 0:
        return LabeledWindow(TimeWindow(disturbance, cfg.fs), 0, disturbance_rms=d_rms)

    jrng = np.random.default_rng(jump_ss)
    lo, hi = jump_index_range(cfg)
    t0 = int(jrng.integers(lo, hi + 1))
    sign = 1.0 if jrng.random() < 0.5 else -1.0
    mag = d_rms * 10.0 ** (cfg.snr_db / 20.0) if d_rms > 0 else cfg.jump_amplitude
    step = gen_jump(cfg, t0, sign * mag, rng=jrng).samples
    return LabeledWindow(
        TimeWindow(disturbance + step, cfg.fs),
        1,
        jump_index=t0,
        jump_amplitude=mag,
        disturbance_rms=d_rms,
    )


def window_seed(cfg: SynthesisConfig, split: str, index: int) -> np.random.SeedSequence:
    """Seed of window ``index`` in ``split``; independent of every split size."""
    return np.random.SeedSequence(cfg.seed, spawn_key=(SPLIT_NAMES.index(split), index))


def generate_split(cfg: SynthesisConfig, split: str, n: int, shielded: bool) -> Split:
    """``n`` windows alternating label 1, 0, 1, 0, ..."""
    if n % 2:
        raise ValueError("a balanced split needs an even size")
    rows, labels = [], []
    for i in range(n):
        lab = 1 - (i % 2)
        lw = synth_labeled(cfg, lab, shielded, window_seed(cfg, split, i))
        rows.append(lw.window.samples)
        labels.append(lab)
    return Split(np.vstack(rows), np.asarray(labels), cfg.fs)


def build_dataset(
    cfg: SynthesisConfig, shielded: bool, sizes: dict[str, int] | None = None
) -> DatasetSplits:
    sizes = dict(SPLIT_SIZES if sizes is None else sizes)
    splits = {name: generate_split(cfg, name, sizes[name], shielded) for name in SPLIT_NAMES}
    return DatasetSplits(**splits, meta={"shielded": shielded, "seed": cfg.seed})
