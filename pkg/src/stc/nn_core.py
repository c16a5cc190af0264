"""Dense numerical core: MLP forward/backward, Adam, plateau LR scheduling,
and a softmax-regression trainer for linear probes.

Everything is float64 and deterministic under a fixed seed; gradients are
meant to survive central finite-difference checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, NumericalError

RELU = "relu"
IDENTITY = "identity"


@dataclass
class MlpParams:
    weights: list[np.ndarray]     # layer l: (d_in, d_out)
    biases: list[np.ndarray]      # layer l: (d_out,)
    activations: list[str]        # "relu" | "identity" per layer

    def __post_init__(self):
        if not (len(self.weights) == len(self.biases) == len(self.activations)):
            raise DataError("weights, biases and activations must align")
        for l in range(len(self.weights) - 1):
            if self.weights[l].shape[1] != self.weights[l + 1].shape[0]:
                raise DataError(f"layer {l} output dim does not chain into layer {l + 1}")
        for act in self.activations:
            if act not in (RELU, IDENTITY):
                raise DataError(f"unknown activation {act!r}")

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def out_dim(self) -> int:
        return self.weights[-1].shape[1]

    def arrays(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out


def init_mlp(sizes: list[int], rng: np.random.Generator) -> MlpParams:
    """Glorot-uniform weights, zero biases; ReLU on hidden layers, identity output."""
    weights, biases, activations = [], [], []
    n_layers = len(sizes) - 1
    for l, (d_in, d_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        bound = np.sqrt(6.0 / (d_in + d_out))
        weights.append(rng.uniform(-bound, bound, size=(d_in, d_out)))
        biases.append(np.zeros(d_out))
        activations.append(IDENTITY if l == n_layers - 1 else RELU)
    return MlpParams(weights=weights, biases=biases, activations=activations)


@dataclass
class MlpCache:
    inputs: list[np.ndarray]   # input matrix fed to each layer
    preacts: list[np.ndarray]  # pre-activation of each layer
    output: np.ndarray


@dataclass
class MlpGrads:
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def arrays(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out


def mlp_forward(params: MlpParams, x: np.ndarray) -> MlpCache:
    if x.ndim != 2 or x.shape[1] != params.in_dim:
        raise DataError(
            f"input has shape {x.shape}, expected (batch, {params.in_dim})"
        )
    inputs, preacts = [], []
    h = x
    for w, b, act in zip(params.weights, params.biases, params.activations):
        inputs.append(h)
        z = h @ w + b
        preacts.append(z)
        h = np.maximum(z, 0.0) if act == RELU else z
    return MlpCache(inputs=inputs, preacts=preacts, output=h)


def mlp_backward(
    params: MlpParams, cache: MlpCache, d_out: np.ndarray
) -> tuple[MlpGrads, np.ndarray]:
    """Reverse pass; returns parameter gradients and the input gradient."""
    if d_out.shape != cache.output.shape:
        raise DataError(
            f"output gradient shape {d_out.shape} does not match cached output "
            f"{cache.output.shape}"
        )
    if len(cache.inputs) != params.n_layers:
        raise DataError("cache does not match parameters")
    d_weights = [np.empty(0)] * params.n_layers
    d_biases = [np.empty(0)] * params.n_layers
    g = d_out
    for l in reversed(range(params.n_layers)):
        if params.activations[l] == RELU:
            g = g * (cache.preacts[l] > 0)
        d_weights[l] = cache.inputs[l].T @ g
        d_biases[l] = g.sum(axis=0)
        g = g @ params.weights[l].T
    return MlpGrads(weights=d_weights, biases=d_biases), g


def zero_grads(params: MlpParams) -> MlpGrads:
    return MlpGrads(
        weights=[np.zeros_like(w) for w in params.weights],
        biases=[np.zeros_like(b) for b in params.biases],
    )


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0
    lr: float = 5e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def adam_init(arrays: list[np.ndarray], lr: float = 5e-4) -> AdamState:
    return AdamState(
        m=[np.zeros_like(a) for a in arrays],
        v=[np.zeros_like(a) for a in arrays],
        lr=lr,
    )


def adam_step(
    state: AdamState,
    arrays: list[np.ndarray],
    grads: list[np.ndarray],
    names: list[str] | None = None,
) -> None:
    """Bias-corrected Adam update, applied in place."""
    if len(arrays) != len(state.m) or len(grads) != len(arrays):
        raise DataError("parameter/gradient/state counts do not match")
    for i, g in enumerate(grads):
        if not np.all(np.isfinite(g)):
            name = names[i] if names else f"param[{i}]"
            raise NumericalError(f"non-finite gradient for {name}")
    state.step += 1
    c1 = 1.0 - state.beta1 ** state.step
    c2 = 1.0 - state.beta2 ** state.step
    for p, g, m, v in zip(arrays, grads, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)


@dataclass
class PlateauScheduler:
    """Reduce-on-plateau: cut lr by `factor` after `patience` consecutive
    non-improving metrics (improvement threshold 1e-4), floored at min_lr."""

    lr: float
    factor: float = 0.5
    patience: int = 10
    min_lr: float = 1e-6
    threshold: float = 1e-4
    best_metric: float = field(default=np.inf)
    stall_count: int = 0

    def __post_init__(self):
        if not 0.0 < self.factor < 1.0:
            raise DataError("factor must be in (0, 1)")
        if self.patience < 0:
            raise DataError("patience must be >= 0")


def plateau_step(sched: PlateauScheduler, metric: float) -> float:
    """Feed one metric observation; returns the (possibly reduced) lr."""
    if not np.isfinite(metric):
        raise NumericalError("non-finite scheduler metric")
    if metric < sched.best_metric - sched.threshold:
        sched.best_metric = metric
        sched.stall_count = 0
    else:
        sched.stall_count += 1
        if sched.stall_count >= sched.patience:
            sched.lr = max(sched.lr * sched.factor, sched.min_lr)
            sched.stall_count = 0
    return sched.lr


@dataclass
class LinearClassifier:
    weights: np.ndarray  # (D, C)
    bias: np.ndarray     # (C,)

    def logits(self, features: np.ndarray) -> np.ndarray:
        return features @ self.weights + self.bias

    def predict(self, features: np.ndarray) -> np.ndarray:
        return self.logits(features).argmax(axis=1)


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def train_logistic(
    features: np.ndarray,
    labels: np.ndarray,
    reg: float = 1e-4,
    epochs: int = 300,
    lr: float = 0.05,
) -> LinearClassifier:
    """Full-batch Adam on softmax cross-entropy; deterministic (zero init)."""
    labels = np.asarray(labels, dtype=np.int64)
    if not np.all(np.isfinite(features)):
        raise NumericalError("non-finite feature matrix")
    classes = np.unique(labels)
    if len(classes) < 2:
        raise DataError("need at least 2 classes to train a classifier")
    n_classes = int(labels.max()) + 1
    n, d = features.shape
    clf = LinearClassifier(
        weights=np.zeros((d, n_classes)), bias=np.zeros(n_classes)
    )
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), labels] = 1.0
    arrays = [clf.weights, clf.bias]
    state = adam_init(arrays, lr=lr)
    for _ in range(epochs):
        probs = softmax(clf.logits(features))
        g = (probs - onehot) / n
        d_w = features.T @ g + reg * clf.weights
        d_b = g.sum(axis=0)
        adam_step(state, arrays, [d_w, d_b], names=["probe.weights", "probe.bias"])
    return clf
