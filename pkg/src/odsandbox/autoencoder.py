"""Reconstruction-error autoencoders (DeepAE and FairOD) in plain numpy.

Architecture: ``num_layers`` dense encoder layers whose widths shrink by
``input_decay`` per layer, a mirrored decoder, ReLU on every hidden layer
and a linear output. Training is transductive: the model is fitted on the
very rows it scores. Gradients are written out by hand and optimised with
Adam.

FairOD adds two penalties on the per-row reconstruction errors ``s``:

* statistical parity: ``|corr(s, g)|`` with ``g`` the 0/1 group indicator;
* group fidelity: for each group, ``1 - DCG / IDCG`` of the current scores
  against the ranking of a frozen DeepAE run, with the ranks smoothed by
  sigmoids so the term is differentiable.
"""

from __future__ import annotations

import dataclasses
import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .datagen import ConfigError, Dataset

NUM_LAYERS = (2, 4)
INPUT_DECAY = (1.0, 1.5, 2.0, 2.5)
EPOCHS = (100, 250)
LEARNING_RATE = (1e-3, 1e-4)
WEIGHT_DECAY = (0.0, 1e-5)
DROPOUT = (0.0, 0.2)
ALPHAS = (0.01, 0.05, 0.2, 0.5, 0.8)
GAMMAS = (0.01, 0.2, 0.5, 0.8)

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
SP_EPS = 1e-8
DEFAULT_BATCH_SIZE = 128


class TrainingDivergedError(RuntimeError):
    pass


@dataclass(frozen=True)
class DeepHP:
    num_layers: int = 2
    input_decay: float = 2.0
    epochs: int = 100
    lr: float = 1e-3
    weight_decay: float = 0.0
    dropout: float = 0.0

    def validate(self, strict_grid: bool = True) -> None:
        if strict_grid:
            checks = (
                ("num_layers", self.num_layers, NUM_LAYERS),
                ("input_decay", self.input_decay, INPUT_DECAY),
                ("epochs", self.epochs, EPOCHS),
                ("lr", self.lr, LEARNING_RATE),
                ("weight_decay", self.weight_decay, WEIGHT_DECAY),
                ("dropout", self.dropout, DROPOUT),
            )
            for name, value, grid in checks:
                if value not in grid:
                    raise ConfigError(f"{name}={value} is outside the search grid {grid}")
        if self.num_layers < 1 or self.epochs < 0 or self.lr <= 0 or self.input_decay < 1:
            raise ConfigError(f"invalid autoencoder hyperparameters: {self}")
        if not 0 <= self.dropout < 1 or self.weight_decay < 0:
            raise ConfigError(f"invalid regularisation settings: {self}")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "DeepHP":
        data = {k: v for k, v in data.items() if k != "threshold"}
        if "num_layer" in data:
            data["num_layers"] = data.pop("num_layer")
        return cls(**data)


@dataclass(frozen=True)
class FairHP:
    base: DeepHP = DeepHP()
    alpha: float = 0.01
    gamma: float = 0.01

    def validate(self, strict_grid: bool = True) -> None:
        self.base.validate(strict_grid)
        if strict_grid and (self.alpha not in ALPHAS or self.gamma not in GAMMAS):
            raise ConfigError(f"(alpha, gamma)=({self.alpha}, {self.gamma}) outside the search grid")
        if self.alpha < 0 or self.gamma < 0:
            raise ConfigError("fairness weights must be non-negative")

    def to_dict(self) -> dict:
        return {**self.base.to_dict(), "alpha": self.alpha, "gamma": self.gamma}

    @classmethod
    def from_dict(cls, data: dict) -> "FairHP":
        data = dict(data)
        alpha, gamma = data.pop("alpha"), data.pop("gamma")
        return cls(base=DeepHP.from_dict(data), alpha=alpha, gamma=gamma)


def deep_grid() -> list[DeepHP]:
    """The 128 DeepAE candidates, in a fixed order."""
    return [
        DeepHP(num_layers=nl, input_decay=dec, epochs=ep, lr=lr, weight_decay=wd, dropout=dr)
        for nl, wd, lr, ep, dec, dr in itertools.product(
            NUM_LAYERS, WEIGHT_DECAY, LEARNING_RATE, EPOCHS, INPUT_DECAY, DROPOUT
        )
    ]


def fair_grid(base: DeepHP) -> list[FairHP]:
    return [FairHP(base=base, alpha=a, gamma=g) for a, g in itertools.product(ALPHAS, GAMMAS)]


def layer_widths(d: int, num_layers: int, input_decay: float) -> list[int]:
    """Encoder widths d, w1, ..., w_L followed by the mirrored decoder back to d."""
    enc = [d]
    for _ in range(num_layers):
        enc.append(max(2, int(round(enc[-1] / input_decay))))
    return enc + enc[-2::-1]


@dataclass
class AeModel:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    trace: list[float] = field(default_factory=list)

    @property
    def widths(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def params(self) -> list[np.ndarray]:
        return [p for pair in zip(self.weights, self.biases) for p in pair]

    def reconstruct(self, X: np.ndarray) -> np.ndarray:
        return forward(self.weights, self.biases, X)[0][-1]

    def save(self, path) -> None:
        """Flat archive of named arrays: ``W0, b0, W1, b1, ...`` plus ``trace``."""
        arrays = {}
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            arrays[f"W{i}"] = w
            arrays[f"b{i}"] = b
        np.savez(Path(path), trace=np.asarray(self.trace), **arrays)

    @classmethod
    def load(cls, path) -> "AeModel":
        with np.load(Path(path)) as data:
            n_layers = sum(1 for key in data.files if key.startswith("W"))
            return cls(
                weights=[data[f"W{i}"] for i in range(n_layers)],
                biases=[data[f"b{i}"] for i in range(n_layers)],
                trace=list(data["trace"]),
            )


def init_model(widths: list[int], rng: np.random.Generator) -> AeModel:
    """Uniform(+-1/sqrt(fan_in)) weights and biases, stored in one flat buffer."""
    shapes = []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        shapes += [(fan_in, fan_out), (fan_out,)]
    flat = np.empty(sum(math.prod(s) for s in shapes))
    views = _views(flat, shapes)
    for i in range(0, len(views), 2):
        bound = 1.0 / math.sqrt(views[i].shape[0])
        views[i][...] = rng.uniform(-bound, bound, size=views[i].shape)
        views[i + 1][...] = rng.uniform(-bound, bound, size=views[i + 1].shape)
    return AeModel(weights=views[0::2], biases=views[1::2])


def _views(flat: np.ndarray, shapes) -> list[np.ndarray]:
    out, offset = [], 0
    for shape in shapes:
        size = math.prod(shape)
        out.append(flat[offset:offset + size].reshape(shape))
        offset += size
    return out


def _flatten(model: AeModel) -> np.ndarray:
    """Rebind the model's parameters as views into one contiguous vector."""
    params = model.params
    flat = np.concatenate([p.ravel() for p in params])
    views = _views(flat, [p.shape for p in params])
    model.weights, model.biases = views[0::2], views[1::2]
    return flat


def forward(weights, biases, X, masks=None):
    """Activations of every layer; ``masks`` are inverted-dropout multipliers."""
    acts = [X]
    pre = []
    last = len(weights) - 1
    for i, (W, b) in enumerate(zip(weights, biases)):
        z = acts[-1] @ W + b
        pre.append(z)
        if i < last:
            a = np.maximum(z, 0.0)
            if masks is not None:
                a = a * masks[i]
            acts.append(a)
        else:
            acts.append(z)
    return acts, pre


class FairContext:
    """Frozen quantities for the FairOD penalties on one dataset.

    ``indicator`` is 1 for group b. Relevance of each row is
    ``2 ** r - 1`` with ``r`` its min-max scaled base score inside its group;
    the sigmoid temperature of the smooth ranks is the group's base-score
    standard deviation.
    """

    def __init__(self, groups: np.ndarray, base_scores: np.ndarray, alpha: float, gamma: float):
        groups = np.asarray(groups)
        if len(np.unique(groups)) < 2:
            raise ConfigError("FairOD needs both groups present (statistical parity is undefined)")
        self.alpha = float(alpha)
        self.gamma = float(gamma)
        self.indicator = (groups == "b").astype(float)
        base_scores = np.asarray(base_scores, dtype=float)
        self.relevance = np.zeros_like(base_scores)
        self.tau = np.ones_like(base_scores)
        for g in np.unique(groups):
            m = groups == g
            bs = base_scores[m]
            span = bs.max() - bs.min()
            r = (bs - bs.min()) / span if span > 0 else np.zeros_like(bs)
            self.relevance[m] = np.power(2.0, r) - 1.0
            self.tau[m] = max(bs.std(), 1e-12)

    def penalty(self, s: np.ndarray, rows: np.ndarray | None = None) -> tuple[float, np.ndarray]:
        """``alpha * L_SP + gamma * L_GF`` on the given rows and its gradient w.r.t. ``s``."""
        if rows is None:
            rows = slice(None)
        g = self.indicator[rows]
        loss = 0.0
        grad = np.zeros_like(s)
        if self.alpha:
            l_sp, d_sp = parity_loss(s, g)
            loss += self.alpha * l_sp
            grad += self.alpha * d_sp
        if self.gamma:
            rel = self.relevance[rows]
            tau = self.tau[rows]
            for value in (0.0, 1.0):
                m = g == value
                if m.sum() < 2:
                    continue
                l_gf, d_gf = fidelity_loss(s[m], rel[m], tau[m][0])
                loss += self.gamma * l_gf
                grad[m] += self.gamma * d_gf
        return loss, grad


def parity_loss(s: np.ndarray, g: np.ndarray) -> tuple[float, np.ndarray]:
    """Absolute Pearson correlation between scores and the group indicator."""
    n = s.shape[0]
    gc = g - g.mean()
    sc = s - s.mean()
    sigma_g = math.sqrt((gc**2).mean())
    sigma_s = math.sqrt((sc**2).mean())
    if sigma_g == 0:
        return 0.0, np.zeros_like(s)
    cov = float(sc @ gc)
    den = n * sigma_s * sigma_g + SP_EPS
    loss = abs(cov) / den
    d_sigma_s = sc / (n * sigma_s) if sigma_s > 0 else np.zeros_like(s)
    grad = np.sign(cov) * gc / den - abs(cov) / den**2 * n * sigma_g * d_sigma_s
    return loss, grad


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def fidelity_loss(s: np.ndarray, rel: np.ndarray, tau: float) -> tuple[float, np.ndarray]:
    """``1 - DCG/IDCG`` with smooth descending ranks ``1 + sum_j sigmoid((s_j - s_i)/tau)``."""
    diff = (s[None, :] - s[:, None]) / tau          # [i, j] = (s_j - s_i) / tau
    sig = _sigmoid(diff)
    np.fill_diagonal(sig, 0.0)
    rank = 1.0 + sig.sum(axis=1)
    log_term = np.log2(1.0 + rank)
    ideal = np.sort(rel)[::-1] / np.log2(2.0 + np.arange(rel.size))
    idcg = ideal.sum()
    if idcg <= 0:
        return 0.0, np.zeros_like(s)
    dcg = float((rel / log_term).sum())
    # d(1/log2(1+rank))/d rank
    dphi = -1.0 / ((1.0 + rank) * math.log(2.0) * log_term**2)
    w = rel * dphi
    A = sig * (1.0 - sig) / tau                     # symmetric, zero diagonal
    d_dcg = A @ w - w * A.sum(axis=1)
    return 1.0 - dcg / idcg, -d_dcg / idcg


def loss_and_grad(model: AeModel, X: np.ndarray, weight_decay: float = 0.0,
                  masks=None, fair: FairContext | None = None, rows=None):
    """Full objective on a batch and its gradient w.r.t. every parameter.

    Returns ``(loss, grads, scores)`` where ``grads`` follows
    :attr:`AeModel.params` ordering (W0, b0, W1, b1, ...).
    """
    n, d = X.shape
    acts, pre = forward(model.weights, model.biases, X, masks)
    resid = acts[-1] - X
    scores = (resid**2).sum(axis=1)
    loss = scores.mean() / d
    d_scores = np.full(n, 1.0 / (n * d))
    if fair is not None and (fair.alpha or fair.gamma):
        penalty, d_pen = fair.penalty(scores, rows)
        loss += penalty
        d_scores = d_scores + d_pen
    if weight_decay:
        loss += 0.5 * weight_decay * sum(float((W**2).sum()) for W in model.weights)

    delta = 2.0 * resid * d_scores[:, None]
    grads_w, grads_b = [], []
    for i in range(len(model.weights) - 1, -1, -1):
        grads_w.append(acts[i].T @ delta + weight_decay * model.weights[i])
        grads_b.append(delta.sum(axis=0))
        if i:
            delta = delta @ model.weights[i].T
            if masks is not None:
                delta = delta * masks[i - 1]
            delta = delta * (pre[i - 1] > 0)
    grads = []
    for gw, gb in zip(reversed(grads_w), reversed(grads_b)):
        grads.extend([gw, gb])
    return float(loss), grads, scores


def _train(ds: Dataset | np.ndarray, hp: DeepHP, seed: int, fair: FairContext | None,
           batch_size: int | None) -> AeModel:
    X = ds.features if isinstance(ds, Dataset) else np.asarray(ds, dtype=float)
    n, d = X.shape
    rng = np.random.default_rng(seed)
    model = init_model(layer_widths(d, hp.num_layers, hp.input_decay), rng)
    flat = _flatten(model)
    m1 = np.zeros_like(flat)
    m2 = np.zeros_like(flat)
    hidden = model.widths[1:-1]
    bs = n if not batch_size or batch_size >= n else int(batch_size)
    step = 0
    for epoch in range(hp.epochs):
        order = np.arange(n) if bs == n else rng.permutation(n)
        total = 0.0
        for start in range(0, n, bs):
            rows = order[start:start + bs]
            masks = None
            if hp.dropout:
                keep = 1.0 - hp.dropout
                masks = [(rng.random((len(rows), w)) < keep) / keep for w in hidden]
            loss, grads, _ = loss_and_grad(model, X[rows], hp.weight_decay, masks, fair, rows)
            if not math.isfinite(loss):
                raise TrainingDivergedError(f"non-finite loss at epoch {epoch}")
            g = np.concatenate([gr.ravel() for gr in grads])
            step += 1
            m1 *= ADAM_BETA1
            m1 += (1.0 - ADAM_BETA1) * g
            m2 *= ADAM_BETA2
            m2 += (1.0 - ADAM_BETA2) * g * g
            flat -= (hp.lr / (1.0 - ADAM_BETA1**step)) * m1 / (
                np.sqrt(m2 / (1.0 - ADAM_BETA2**step)) + ADAM_EPS
            )
            total += loss * len(rows)
        model.trace.append(total / n)
    return model


def ae_train(ds, hp: DeepHP, seed: int = 0, batch_size: int | None = DEFAULT_BATCH_SIZE) -> AeModel:
    """Fit a DeepAE on every row of ``ds`` (no train/test split)."""
    hp.validate(strict_grid=False)
    return _train(ds, hp, seed, None, batch_size)


def ae_score(model: AeModel, ds) -> np.ndarray:
    """Per-row squared reconstruction error with dropout disabled."""
    X = ds.features if isinstance(ds, Dataset) else np.asarray(ds, dtype=float)
    if X.shape[1] != model.widths[0]:
        raise ValueError(f"model expects {model.widths[0]} columns, data has {X.shape[1]}")
    return ((model.reconstruct(X) - X) ** 2).sum(axis=1)


def fairod_train(ds: Dataset, hp: FairHP, seed: int = 0, grouping: str = "reported",
                 base_scores: np.ndarray | None = None,
                 batch_size: int | None = DEFAULT_BATCH_SIZE) -> AeModel:
    """Fit FairOD; with ``alpha = gamma = 0`` this is exactly :func:`ae_train`.

    ``base_scores`` are the frozen DeepAE scores for the fidelity term; when
    omitted they come from a DeepAE fitted with the same base settings and seed.
    """
    hp.validate(strict_grid=False)
    groups = ds.groups(grouping)
    if len(np.unique(groups)) < 2:
        raise ConfigError("FairOD needs both groups present (statistical parity is undefined)")
    if not (hp.alpha or hp.gamma):
        return _train(ds, hp.base, seed, None, batch_size)
    if base_scores is None:
        base_scores = ae_score(ae_train(ds, hp.base, seed, batch_size), ds)
    fair = FairContext(groups, base_scores, hp.alpha, hp.gamma)
    return _train(ds, hp.base, seed, fair, batch_size)
