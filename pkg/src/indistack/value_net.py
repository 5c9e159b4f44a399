"""Scalar-output MLP with exact input-space and parameter-space gradients.

The network is a plain tanh/softplus multilayer perceptron with a linear
output head, implemented directly on NumPy arrays so that both the value
J(x) and its gradient dJ/dx are cheap, exact, and available in batches.
Batched gradients are the workhorse of the whole package: they feed the
Lie derivatives used by the trainer and the controller.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, ShapeError, TrainingError
from .validation import as_batch


def _softplus(z):
    return np.logaddexp(0.0, z)


def _softplus_grad(z):
    return 1.0 / (1.0 + np.exp(-z))


# name -> (activation, derivative as a function of the pre-activation z)
ACTIVATIONS = {
    "tanh": (np.tanh, lambda z: 1.0 - np.tanh(z) ** 2),
    "softplus": (_softplus, _softplus_grad),
}


class ValueNet:
    """Feed-forward approximator J(x) -> scalar with a linear output head.

    Weights are initialized uniformly in +-1/sqrt(fan_in) from a seeded
    generator, so two nets built with identical arguments are bitwise equal.
    """

    def __init__(self, layer_dims, activation: str = "tanh", seed: int = 0):
        layer_dims = [int(d) for d in layer_dims]
        if len(layer_dims) < 2:
            raise ConfigurationError(
                f"layer_dims needs at least input and output sizes, got {layer_dims}"
            )
        if any(d < 1 for d in layer_dims):
            raise ConfigurationError(f"layer_dims must all be >= 1, got {layer_dims}")
        if layer_dims[-1] != 1:
            raise ConfigurationError(
                f"output dimension must be 1, got {layer_dims[-1]}"
            )
        if activation not in ACTIVATIONS:
            raise ConfigurationError(
                f"unknown activation {activation!r}; choose from {sorted(ACTIVATIONS)}"
            )
        self.layer_dims = layer_dims
        self.activation = activation
        self.seed = int(seed)
        rng = np.random.default_rng(self.seed)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            self.weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
            self.biases.append(np.zeros(fan_out))

    # -- basic introspection -------------------------------------------------

    @property
    def n(self) -> int:
        """Input (state) dimension."""
        return self.layer_dims[0]

    def num_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def copy(self) -> "ValueNet":
        other = ValueNet(self.layer_dims, self.activation, self.seed)
        other.weights = [w.copy() for w in self.weights]
        other.biases = [b.copy() for b in self.biases]
        return other

    # -- evaluation ----------------------------------------------------------

    def _forward_cached(self, X: np.ndarray):
        """Forward pass keeping pre-activations and activations per layer."""
        act, _ = ACTIVATIONS[self.activation]
        outputs = [X]
        pre = []
        a = X
        for W, b in zip(self.weights[:-1], self.biases[:-1]):
            z = a @ W.T + b
            pre.append(z)
            a = act(z)
            outputs.append(a)
        y = a @ self.weights[-1].T + self.biases[-1]
        return outputs, pre, y[:, 0]

    def forward(self, x):
        """Evaluate J at a state (n,) -> float, or a batch (B, n) -> (B,)."""
        X, single = as_batch(x, self.n, "x")
        _, _, y = self._forward_cached(X)
        return float(y[0]) if single else y

    def input_grad(self, x):
        """Exact dJ/dx at a state (n,) -> (n,), or a batch (B, n) -> (B, n)."""
        X, single = as_batch(x, self.n, "x")
        _, act_grad = ACTIVATIONS[self.activation]
        _, pre, _ = self._forward_cached(X)
        D = np.broadcast_to(self.weights[-1], (X.shape[0], self.weights[-1].shape[1]))
        for W, z in zip(reversed(self.weights[:-1]), reversed(pre)):
            D = (D * act_grad(z)) @ W
        D = np.ascontiguousarray(D)
        return D[0] if single else D

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "layer_dims": list(self.layer_dims),
            "activation": self.activation,
            "seed": self.seed,
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ValueNet":
        try:
            net = cls(data["layer_dims"], data["activation"], data.get("seed", 0))
            weights = [np.asarray(w, dtype=float) for w in data["weights"]]
            biases = [np.asarray(b, dtype=float) for b in data["biases"]]
        except (KeyError, TypeError) as exc:
            raise ConfigurationError(f"malformed model data: {exc}") from exc
        if len(weights) != len(net.weights) or len(biases) != len(net.biases):
            raise ShapeError("model data layer count does not match layer_dims")
        for i, (w, b) in enumerate(zip(weights, biases)):
            if w.shape != net.weights[i].shape or b.shape != net.biases[i].shape:
                raise ShapeError(
                    f"layer {i} shapes {w.shape}/{b.shape} do not match "
                    f"declared dims {net.weights[i].shape}/{net.biases[i].shape}"
                )
        net.weights = weights
        net.biases = biases
        return net

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path) -> "ValueNet":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except FileNotFoundError:
            raise ConfigurationError(f"model file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"model file {path} is not valid JSON: {exc}") from None
        return cls.from_dict(data)


@dataclass
class AdamState:
    """First-order adaptive-moment optimizer state for one ValueNet."""

    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    def _ensure(self, params):
        if not self.m:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]

    def update(self, params, grads) -> None:
        self._ensure(params)
        self.step += 1
        b1c = 1.0 - self.beta1**self.step
        b2c = 1.0 - self.beta2**self.step
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.learning_rate * (m / b1c) / (np.sqrt(v / b2c) + self.eps)


def _mse_gradients(net: ValueNet, X: np.ndarray, targets: np.ndarray):
    """Loss and parameter gradients of mean((J(x) - target)^2) over a batch."""
    _, act_grad = ACTIVATIONS[net.activation]
    outputs, pre, y = net._forward_cached(X)
    err = y - targets
    loss = float(np.mean(err**2))
    delta = (2.0 / X.shape[0]) * err
    grads_w = [None] * len(net.weights)
    grads_b = [None] * len(net.biases)
    grads_w[-1] = delta[None, :] @ outputs[-1]
    grads_b[-1] = np.array([delta.sum()])
    D = delta[:, None] @ net.weights[-1]
    for layer in range(len(net.weights) - 2, -1, -1):
        Dz = D * act_grad(pre[layer])
        grads_w[layer] = Dz.T @ outputs[layer]
        grads_b[layer] = Dz.sum(axis=0)
        D = Dz @ net.weights[layer]
    return loss, grads_w, grads_b


def fit_batch(net: ValueNet, states, targets, optimizer: AdamState) -> float:
    """One optimizer step on the MSE between J(states) and targets.

    Returns the pre-update loss. Non-finite targets abort with the index of
    the first offender, since they would silently poison the parameters.
    """
    X, _ = as_batch(states, net.n, "states")
    t = np.asarray(targets, dtype=float).reshape(-1)
    if t.shape[0] != X.shape[0]:
        raise ShapeError(
            f"{X.shape[0]} states but {t.shape[0]} targets"
        )
    if X.shape[0] < 1:
        raise ShapeError("fit_batch needs at least one sample")
    bad = np.flatnonzero(~np.isfinite(t))
    if bad.size:
        raise TrainingError(f"non-finite target at index {bad[0]}")
    loss, grads_w, grads_b = _mse_gradients(net, X, t)
    optimizer.update(net.weights + net.biases, grads_w + grads_b)
    return loss
