"""Feed-forward ReLU network with a softmax output, fit by full-batch L-BFGS."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..dataset import Dataset
from ..errors import DatasetError, HyperparameterError
from .base import array, as_csr, masked_argmax, present_classes
from .lbfgs import lbfgs_minimize


@dataclass(frozen=True)
class MLPConfig:
    hidden_units: tuple = (100,)
    activation: str = "relu"
    l2_lambda: float = 1e-4
    max_iter: int = 200
    tol: float = 1e-5
    memory: int = 10
    seed: int = 0

    def __post_init__(self):
        hidden = self.hidden_units
        if isinstance(hidden, (int, np.integer)):
            hidden = (int(hidden),)
        object.__setattr__(self, "hidden_units", tuple(int(h) for h in hidden))
        if not self.hidden_units or min(self.hidden_units) < 1:
            raise HyperparameterError("every hidden layer needs at least one unit")
        if self.activation != "relu":
            raise HyperparameterError("only the relu activation is implemented")
        if self.l2_lambda < 0 or self.max_iter < 0:
            raise HyperparameterError("l2_lambda and max_iter must be >= 0")


def layer_shapes(n_features: int, hidden: tuple, n_classes: int) -> list[tuple[int, int]]:
    sizes = [n_features, *hidden, n_classes]
    return list(zip(sizes[:-1], sizes[1:]))


def unpack(theta: np.ndarray, shapes) -> list[tuple[np.ndarray, np.ndarray]]:
    layers = []
    pos = 0
    for fan_in, fan_out in shapes:
        W = theta[pos:pos + fan_in * fan_out].reshape(fan_in, fan_out)
        pos += fan_in * fan_out
        b = theta[pos:pos + fan_out]
        pos += fan_out
        layers.append((W, b))
    return layers


def n_params(shapes) -> int:
    return sum(i * o + o for i, o in shapes)


def init_params(shapes, seed: int) -> np.ndarray:
    """Uniform(-r, r) weights with r = sqrt(6 / (fan_in + fan_out)); zero biases."""
    rng = np.random.default_rng(seed)
    parts = []
    for fan_in, fan_out in shapes:
        r = np.sqrt(6.0 / (fan_in + fan_out))
        parts.append(rng.uniform(-r, r, size=fan_in * fan_out))
        parts.append(np.zeros(fan_out))
    return np.concatenate(parts)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def forward(theta, shapes, X) -> np.ndarray:
    layers = unpack(theta, shapes)
    A = as_csr(X)
    for W, b in layers[:-1]:
        A = np.maximum(A @ W + b, 0.0)
    W, b = layers[-1]
    return np.asarray(A @ W) + b


def mlp_loss_and_gradient(theta, shapes, X, labels, l2_lambda: float):
    """Mean softmax cross-entropy plus (l2_lambda / 2) * ||weights||^2."""
    if not np.all(np.isfinite(theta)):
        raise DatasetError("non-finite parameters")
    X = as_csr(X)
    n = X.shape[0]
    layers = unpack(theta, shapes)
    acts = [X]
    pre = []
    A = X
    for W, b in layers[:-1]:
        Z = A @ W + b
        pre.append(Z)
        A = np.maximum(Z, 0.0)
        acts.append(A)
    W, b = layers[-1]
    logits = np.asarray(A @ W) + b
    top = logits.max(axis=1, keepdims=True)
    logz = top[:, 0] + np.log(np.exp(logits - top).sum(axis=1))
    loss = float(np.mean(logz - logits[np.arange(n), labels]))
    loss += 0.5 * l2_lambda * sum(float(np.sum(W * W)) for W, _ in layers)

    grads = []
    delta = np.exp(logits - logz[:, None])
    delta[np.arange(n), labels] -= 1.0
    delta /= n
    for li in range(len(layers) - 1, -1, -1):
        W, _ = layers[li]
        A = acts[li]
        gW = np.asarray(A.T @ delta) + l2_lambda * W
        gb = delta.sum(axis=0)
        grads.append((gW, gb))
        if li > 0:
            delta = (delta @ W.T) * (pre[li - 1] > 0)
    grads.reverse()
    return loss, np.concatenate([part.ravel() for gW, gb in grads for part in (gW, gb)])


@dataclass(frozen=True, eq=False)
class MLPModel:
    kind = "mlp"
    params: np.ndarray
    shapes: tuple
    present: np.ndarray
    config: MLPConfig
    loss_history: tuple = field(default=(), repr=False)
    converged: bool = False

    @property
    def n_features(self) -> int:
        return self.shapes[0][0]

    def layers(self):
        return unpack(self.params, self.shapes)

    def predict_proba(self, X) -> np.ndarray:
        return softmax(forward(self.params, self.shapes, X))

    def predict_matrix(self, X) -> np.ndarray:
        return masked_argmax(forward(self.params, self.shapes, X), self.present)

    def to_payload(self) -> dict:
        c = self.config
        return {"params": self.params.tolist(), "shapes": [list(s) for s in self.shapes],
                "present": self.present.tolist(), "converged": self.converged,
                "config": {"hidden_units": list(c.hidden_units), "activation": c.activation,
                           "l2_lambda": c.l2_lambda, "max_iter": c.max_iter, "tol": c.tol,
                           "memory": c.memory, "seed": c.seed},
                "loss_history": list(self.loss_history)}

    @classmethod
    def from_payload(cls, d) -> "MLPModel":
        cfg = d["config"]
        config = MLPConfig(tuple(cfg["hidden_units"]), cfg["activation"], float(cfg["l2_lambda"]),
                           int(cfg["max_iter"]), float(cfg["tol"]), int(cfg["memory"]), int(cfg["seed"]))
        return cls(array(d["params"]), tuple(tuple(s) for s in d["shapes"]), array(d["present"], bool), config,
                   tuple(d.get("loss_history", ())), bool(d.get("converged", False)))


def fit_mlp(dataset: Dataset, config: MLPConfig = MLPConfig()) -> MLPModel:
    if len(dataset) == 0:
        raise DatasetError("empty dataset")
    shapes = tuple(layer_shapes(dataset.n_features, config.hidden_units, dataset.n_classes))
    theta0 = init_params(shapes, config.seed)
    X, y = dataset.X, dataset.labels

    def objective(theta):
        return mlp_loss_and_gradient(theta, shapes, X, y, config.l2_lambda)

    res = lbfgs_minimize(objective, theta0, m=config.memory, tol=config.tol, max_iter=config.max_iter)
    return MLPModel(res.x, shapes, present_classes(y, dataset.n_classes), config, tuple(res.history),
                    res.converged)
