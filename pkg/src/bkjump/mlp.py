"""The 9-12-12-1 ReLU network and its momentum gradient-descent trainer.

Objective over a batch (features already standardized):

    J = sum_i (z(f_i) - l_i)^2 + lam * sum(weights^2)

with z the logistic output.  Biases are not regularized.  Training is
full-batch with one fresh inverted-dropout mask per epoch on the hidden
layers, and keeps the parameters that scored best on the eval split.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .metrics import max_tp_tn
from .svm import Standardizer, fit_standardizer

LAYER_SIZES = (9, 12, 12, 1)


class TrainingDivergedError(ArithmeticError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-2
    momentum: float = 0.9
    lam: float = 1e-2
    max_epochs: int = 150
    min_grad: float = 1e-6
    dropout_rate: float = 0.2
    init_std: float = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must lie in [0, 1)")
        if not self.lam > 0:
            raise ValueError("lam must be strictly positive")
        if not 0 <= self.dropout_rate < 1:
            raise ValueError("dropout_rate must lie in [0, 1)")
        if self.max_epochs < 0:
            raise ValueError("max_epochs must be nonnegative")


@dataclass(eq=False)
class MlpModel:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    standardizer: Standardizer | None = None
    history: dict = field(default_factory=dict)

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.weights[0].shape[0],) + tuple(w.shape[1] for w in self.weights)

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def flat(self) -> np.ndarray:
        """Parameters in layer order: W1 (row-major), b1, W2, b2, ..."""
        return np.concatenate([a.ravel() for pair in zip(self.weights, self.biases) for a in pair])

    def with_flat(self, theta: np.ndarray) -> "MlpModel":
        theta = np.asarray(theta, dtype=float)
        if theta.size != self.n_params:
            raise ValueError(f"expected {self.n_params} parameters, got {theta.size}")
        ws, bs, k = [], [], 0
        for w, b in zip(self.weights, self.biases):
            ws.append(theta[k : k + w.size].reshape(w.shape).copy())
            k += w.size
            bs.append(theta[k : k + b.size].copy())
            k += b.size
        return MlpModel(ws, bs, self.standardizer)

    def copy(self) -> "MlpModel":
        return self.with_flat(self.flat())


def n_params(layer_sizes=LAYER_SIZES) -> int:
    return sum(a * b + b for a, b in zip(layer_sizes[:-1], layer_sizes[1:]))


def init(seed: int, layer_sizes=LAYER_SIZES, init_std: float = 0.1) -> MlpModel:
    """Weights i.i.d. N(0, init_std^2), biases zero."""
    rng = np.random.default_rng(seed)
    ws = [init_std * rng.standard_normal((a, b)) for a, b in zip(layer_sizes[:-1], layer_sizes[1:])]
    bs = [np.zeros(b) for b in layer_sizes[1:]]
    return MlpModel(ws, bs)


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def draw_masks(m: MlpModel, n: int, rate: float, rng: np.random.Generator) -> list[np.ndarray]:
    """Keep-masks (1 = kept) for every hidden layer, one row per sample."""
    return [(rng.random((n, h)) >= rate).astype(float) for h in m.layer_sizes[1:-1]]


def _check_input(m: MlpModel, x) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != m.layer_sizes[0]:
        raise ValueError(f"model expects {m.layer_sizes[0]} inputs, got {x.shape[1]}")
    return x


def _forward_cache(m: MlpModel, x: np.ndarray, masks, rate: float):
    acts = [x]
    pre = []
    h = x
    last = len(m.weights) - 1
    for layer, (w, b) in enumerate(zip(m.weights, m.biases)):
        z = np.einsum("ni,ij->nj", h, w) + b
        pre.append(z)
        if layer == last:
            h = sigmoid(z)
        else:
            h = np.maximum(z, 0.0)
            if masks is not None:
                h = h * masks[layer] / (1.0 - rate)
        acts.append(h)
    return pre, acts


def forward(m: MlpModel, x, mode: str = "infer", masks=None, rate: float = 0.0) -> np.ndarray:
    """Network output in (0, 1) per row of standardized features.

    ``mode="train"`` applies the supplied keep-masks with inverted scaling
    ``1 / (1 - rate)``; ``"infer"`` ignores masks.
    """
    if mode not in ("train", "infer"):
        raise ValueError(f"mode must be 'train' or 'infer', got {mode!r}")
    x = _check_input(m, x)
    if mode == "train" and masks is not None:
        if len(masks) != len(m.weights) - 1 or any(
            mk.shape != (x.shape[0], h) for mk, h in zip(masks, m.layer_sizes[1:-1])
        ):
            raise ValueError("dropout masks do not match the hidden layers")
    else:
        masks = None
    return _forward_cache(m, x, masks, rate)[1][-1][:, 0]


def loss_j(m: MlpModel, x, labels, lam: float, masks=None, rate: float = 0.0) -> float:
    x = _check_input(m, x)
    y = np.asarray(labels, dtype=float).ravel()
    out = forward(m, x, "train" if masks is not None else "infer", masks, rate)
    reg = sum(float(np.sum(w * w)) for w in m.weights)
    return float(np.sum((out - y) ** 2) + lam * reg)


def grad(m: MlpModel, x, labels, lam: float, masks=None, rate: float = 0.0):
    """Exact gradient of ``loss_j`` as (weight grads, bias grads)."""
    x = _check_input(m, x)
    y = np.asarray(labels, dtype=float).ravel()
    pre, acts = _forward_cache(m, x, masks, rate)
    out = acts[-1][:, 0]
    delta = (2.0 * (out - y) * out * (1.0 - out))[:, None]
    gw: list[np.ndarray] = [None] * len(m.weights)
    gb: list[np.ndarray] = [None] * len(m.weights)
    for layer in range(len(m.weights) - 1, -1, -1):
        gw[layer] = acts[layer].T @ delta + 2.0 * lam * m.weights[layer]
        gb[layer] = delta.sum(axis=0)
        if layer == 0:
            break
        back = delta @ m.weights[layer].T
        if masks is not None:
            back = back * masks[layer - 1] / (1.0 - rate)
        delta = back * (pre[layer - 1] > 0)
    return gw, gb


def flat_grad(m: MlpModel, x, labels, lam: float, masks=None, rate: float = 0.0) -> np.ndarray:
    gw, gb = grad(m, x, labels, lam, masks, rate)
    return np.concatenate([a.ravel() for pair in zip(gw, gb) for a in pair])


def _eval_key(m: MlpModel, x_ev, y_ev) -> tuple[float, float]:
    out = forward(m, x_ev)
    acc, _ = max_tp_tn(out, y_ev)
    return acc, -float(np.sum((out - y_ev) ** 2))


def train(train_set, eval_set, cfg: TrainConfig = TrainConfig()) -> MlpModel:
    """Momentum GD on the training split; returns the best-on-eval snapshot.

    Both sets are ``(raw_features, labels)``.  The standardizer is fitted on
    the training features and stored on the returned model.  Snapshots are
    ranked by eval max(TP+TN), then by eval squared error.
    """
    x_raw, y = train_set
    x_raw = np.atleast_2d(np.asarray(x_raw, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if not np.all(np.isin(y, (0.0, 1.0))):
        raise ValueError("labels must be 0 or 1")
    st = fit_standardizer(x_raw)
    x = st.apply(x_raw)
    x_ev = st.apply(np.atleast_2d(np.asarray(eval_set[0], dtype=float)))
    y_ev = np.asarray(eval_set[1], dtype=float).ravel()

    init_ss, mask_ss = np.random.SeedSequence(cfg.seed).spawn(2)
    sizes = (x.shape[1],) + LAYER_SIZES[1:]
    model = init(int(init_ss.generate_state(1)[0]), sizes, cfg.init_std)
    model.standardizer = st
    mask_rng = np.random.default_rng(mask_ss)

    theta = model.flat()
    velocity = np.zeros_like(theta)
    best_key = _eval_key(model, x_ev, y_ev)
    best_theta, best_epoch = theta.copy(), 0
    losses: list[float] = []
    epoch = 0
    # non-finite values are checked explicitly below
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(1, cfg.max_epochs + 1):
            current = model.with_flat(theta)
            masks = draw_masks(current, x.shape[0], cfg.dropout_rate, mask_rng) if cfg.dropout_rate > 0 else None
            loss = loss_j(current, x, y, cfg.lam, masks, cfg.dropout_rate)
            if not np.isfinite(loss):
                raise TrainingDivergedError(f"non-finite loss at epoch {epoch} (lr={cfg.learning_rate})")
            g = flat_grad(current, x, y, cfg.lam, masks, cfg.dropout_rate)
            losses.append(loss)
            if np.max(np.abs(g)) < cfg.min_grad:
                epoch -= 1
                break
            velocity = cfg.momentum * velocity - cfg.learning_rate * g
            theta = theta + velocity
            if not np.all(np.isfinite(theta)):
                raise TrainingDivergedError(f"non-finite parameters at epoch {epoch}")
            key = _eval_key(model.with_flat(theta), x_ev, y_ev)
            if key > best_key:
                best_key, best_theta, best_epoch = key, theta.copy(), epoch

    best = model.with_flat(best_theta)
    best.standardizer = st
    best.history = {"loss": losses, "best_epoch": best_epoch, "epochs": epoch, "eval_accuracy": best_key[0]}
    return best


def scores(m: MlpModel, features) -> np.ndarray:
    """Forward outputs for raw feature rows (standardized with the model's scaler)."""
    x = np.atleast_2d(np.asarray(features, dtype=float))
    if m.standardizer is not None:
        x = m.standardizer.apply(x)
    return forward(m, x)


def predict(m: MlpModel, f) -> int:
    return int(scores(m, getattr(f, "values", f))[0] >= 0.5)


def predict_many(m: MlpModel, features) -> np.ndarray:
    return (scores(m, features) >= 0.5).astype(int)
