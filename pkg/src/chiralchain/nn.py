"""Dense feedforward regression network in numpy: ReLU, inverted dropout,
MSE, backprop and Adam."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

FORMAT_VERSION = 1
DEFAULT_DIMS = (5, 64, 32, 25)


class EmptyDataset(ValueError):
    pass


class ModelFormatError(ValueError):
    pass


@dataclass
class Layer:
    weight: np.ndarray  # (in, out); rows act on the incoming row vector
    bias: np.ndarray
    activation: str = "relu"


@dataclass
class NetworkModel:
    layers: list
    dropout_rate: float = 0.1
    # optional affine input standardization, x -> (x - shift) / scale
    input_shift: np.ndarray | None = None
    input_scale: np.ndarray | None = None
    # optional output map, out = y * scale + shift, so the layers work on O(1) values
    output_shift: np.ndarray | None = None
    output_scale: np.ndarray | None = None

    def __post_init__(self):
        if not 0 <= self.dropout_rate < 1:
            raise ValueError("dropout rate must lie in [0, 1)")
        for a, b in zip(self.layers, self.layers[1:]):
            if a.weight.shape[1] != b.weight.shape[0]:
                raise ValueError("incompatible layer dimensions")
        for l in self.layers:
            if l.activation not in ("relu", "identity"):
                raise ValueError(f"unknown activation {l.activation}")
            if l.bias.shape != (l.weight.shape[1],):
                raise ValueError("bias shape mismatch")

    @property
    def dims(self) -> tuple:
        return (self.layers[0].weight.shape[0],) + tuple(l.weight.shape[1] for l in self.layers)

    @property
    def input_dim(self) -> int:
        return self.dims[0]

    @property
    def output_dim(self) -> int:
        return self.dims[-1]

    def params(self) -> list:
        out = []
        for l in self.layers:
            out += [l.weight, l.bias]
        return out

    def copy(self) -> "NetworkModel":
        return NetworkModel([Layer(l.weight.copy(), l.bias.copy(), l.activation) for l in self.layers],
                            self.dropout_rate,
                            *[None if a is None else a.copy() for a in
                              (self.input_shift, self.input_scale, self.output_shift, self.output_scale)])


def init_network(dims=DEFAULT_DIMS, dropout_rate: float = 0.1, seed: int = 0) -> NetworkModel:
    """He-uniform weights, zero biases, ReLU hidden layers, identity output."""
    rng = np.random.default_rng(seed)
    layers = []
    for k, (n_in, n_out) in enumerate(zip(dims[:-1], dims[1:])):
        lim = np.sqrt(6.0 / n_in)
        act = "identity" if k == len(dims) - 2 else "relu"
        layers.append(Layer(rng.uniform(-lim, lim, (n_in, n_out)), np.zeros(n_out), act))
    return NetworkModel(layers, dropout_rate)


def relu(x):
    return np.maximum(x, 0.0)


@dataclass
class Cache:
    inputs: list = field(default_factory=list)   # input to each layer
    pre: list = field(default_factory=list)      # pre-activations
    masks: list = field(default_factory=list)    # scaled dropout masks (None in infer mode)


def forward(model: NetworkModel, x, train: bool = False, rng=None, return_cache: bool = False):
    """Out_L = act(Out_{L-1} W_L + B_L); dropout after each hidden layer in train mode."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = x[None, :] if single else x
    if X.shape[1] != model.input_dim:
        raise ValueError(f"input dimension {X.shape[1]} != {model.input_dim}")
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite input")
    if model.input_shift is not None:
        X = (X - model.input_shift) / model.input_scale
    if train and rng is None:
        raise ValueError("train mode needs an rng")
    keep = 1.0 - model.dropout_rate
    cache = Cache()
    h = X
    for k, l in enumerate(model.layers):
        cache.inputs.append(h)
        z = h @ l.weight + l.bias
        cache.pre.append(z)
        h = relu(z) if l.activation == "relu" else z
        hidden = k < len(model.layers) - 1
        if hidden and train and model.dropout_rate > 0:
            mask = (rng.random(h.shape) < keep) / keep
            h = h * mask
            cache.masks.append(mask)
        elif hidden:
            cache.masks.append(None)
    if model.output_scale is not None:
        h = h * model.output_scale + model.output_shift
    out = h[0] if single else h
    return (out, cache) if return_cache else out


def mse(pred, target) -> float:
    """Batch mean of per-sample squared Euclidean norms."""
    P = np.atleast_2d(np.asarray(pred, dtype=float))
    T = np.atleast_2d(np.asarray(target, dtype=float))
    if P.shape != T.shape:
        raise ValueError(f"shape mismatch {P.shape} vs {T.shape}")
    return float(np.mean(np.sum((P - T) ** 2, axis=1)))


def backward(model: NetworkModel, cache: Cache, pred, target) -> list:
    """Gradients of the batch MSE, returned as [dW1, db1, dW2, db2, ...]."""
    P = np.atleast_2d(pred)
    T = np.atleast_2d(np.asarray(target, dtype=float))
    if P.shape != T.shape:
        raise ValueError("shape mismatch")
    n = P.shape[0]
    delta = 2.0 * (P - T) / n
    if model.output_scale is not None:
        delta = delta * model.output_scale
    grads = [None] * (2 * len(model.layers))
    for k in range(len(model.layers) - 1, -1, -1):
        l = model.layers[k]
        if k < len(model.layers) - 1:
            mask = cache.masks[k]
            if mask is not None:
                delta = delta * mask
        if l.activation == "relu":
            delta = delta * (cache.pre[k] > 0)
        grads[2 * k] = cache.inputs[k].T @ delta
        grads[2 * k + 1] = delta.sum(axis=0)
        delta = delta @ l.weight.T
    return grads


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 32
    epochs: int = 500
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning rate must be positive")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("betas must lie in (0, 1)")
        if self.batch_size < 1 or self.epochs < 0:
            raise ValueError("bad batch size or epoch count")


@dataclass
class AdamState:
    m: list
    v: list
    step: int = 0

    @classmethod
    def zeros_like(cls, model: NetworkModel) -> "AdamState":
        return cls([np.zeros_like(p) for p in model.params()], [np.zeros_like(p) for p in model.params()])


def adam_step(model: NetworkModel, grads: list, state: AdamState, config: TrainConfig):
    """Bias-corrected Adam update, applied in place. Returns (model, state)."""
    state.step += 1
    b1, b2 = config.beta1, config.beta2
    c1 = 1 - b1**state.step
    c2 = 1 - b2**state.step
    for p, g, m, v in zip(model.params(), grads, state.m, state.v):
        if p.shape != g.shape:
            raise ValueError("gradient shape mismatch")
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g * g
        p -= config.learning_rate * (m / c1) / (np.sqrt(v / c2) + config.eps)
    return model, state


@dataclass
class TrainHistory:
    train_loss: list = field(default_factory=list)
    test_loss: list = field(default_factory=list)


def _shift_scale(A):
    A = np.asarray(A, dtype=float)
    sd = A.std(axis=0)
    return A.mean(axis=0), np.where(sd > 0, sd, 1.0)


def fit_input_scaling(model: NetworkModel, X) -> NetworkModel:
    """Store per-feature mean/std of X in the model; constant features pass through centered."""
    model.input_shift, model.input_scale = _shift_scale(X)
    return model


def fit_output_scaling(model: NetworkModel, Y) -> NetworkModel:
    """Per-output mean/std of the training targets; the loss stays in raw units."""
    model.output_shift, model.output_scale = _shift_scale(Y)
    return model


def train(model: NetworkModel, X, Y, config: TrainConfig = TrainConfig(), X_test=None, Y_test=None):
    """Minibatch Adam with seeded shuffling and dropout masks.

    History holds the loss before training (index 0) and after every epoch.
    Train loss is evaluated in infer mode on the full training set.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.shape[0] == 0:
        raise EmptyDataset("training set is empty")
    if X.shape[0] != Y.shape[0]:
        raise ValueError("X and Y lengths differ")
    rng = np.random.default_rng(config.seed)
    state = AdamState.zeros_like(model)
    hist = TrainHistory()
    has_test = X_test is not None and len(X_test) > 0

    def record():
        hist.train_loss.append(mse(forward(model, X), Y))
        if has_test:
            hist.test_loss.append(mse(forward(model, X_test), Y_test))

    record()
    n = X.shape[0]
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            pred, cache = forward(model, X[idx], train=True, rng=rng, return_cache=True)
            grads = backward(model, cache, pred, Y[idx])
            adam_step(model, grads, state, config)
        record()
    return model, hist


def _arr(a):
    return None if a is None else np.asarray(a, dtype=float).tolist()


def save_model(model: NetworkModel, path, meta: dict | None = None):
    doc = {
        "version": FORMAT_VERSION,
        "dims": list(model.dims),
        "activations": [l.activation for l in model.layers],
        "dropout_rate": model.dropout_rate,
        "weights": [l.weight.tolist() for l in model.layers],
        "biases": [l.bias.tolist() for l in model.layers],
        "input_shift": _arr(model.input_shift),
        "input_scale": _arr(model.input_scale),
        "output_shift": _arr(model.output_shift),
        "output_scale": _arr(model.output_scale),
        "meta": meta or {},
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)  # json writes floats with repr, so the round trip is exact


def load_model(path, expect_input_dim: int | None = None, expect_output_dim: int | None = None,
               return_meta: bool = False):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"malformed model file {path}: {exc}") from exc
    if not isinstance(doc, dict) or "version" not in doc:
        raise ModelFormatError("missing version field")
    if doc["version"] != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model version {doc['version']}")
    try:
        dims = [int(d) for d in doc["dims"]]
        layers = []
        for k, (W, b, act) in enumerate(zip(doc["weights"], doc["biases"], doc["activations"])):
            W = np.array(W, dtype=float).reshape(dims[k], dims[k + 1])
            b = np.array(b, dtype=float).reshape(dims[k + 1])
            layers.append(Layer(W, b, act))
        if len(layers) != len(dims) - 1:
            raise ModelFormatError("layer count does not match dims")
        extra = [doc.get(k) for k in ("input_shift", "input_scale", "output_shift", "output_scale")]
        model = NetworkModel(layers, float(doc["dropout_rate"]),
                             *[None if a is None else np.array(a, dtype=float) for a in extra])
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ModelFormatError):
            raise
        raise ModelFormatError(f"malformed model file {path}: {exc}") from exc
    if expect_input_dim is not None and model.input_dim != expect_input_dim:
        raise ModelFormatError(f"model input dim {model.input_dim}, expected {expect_input_dim}")
    if expect_output_dim is not None and model.output_dim != expect_output_dim:
        raise ModelFormatError(f"model output dim {model.output_dim}, expected {expect_output_dim}")
    return (model, doc.get("meta", {})) if return_meta else model
