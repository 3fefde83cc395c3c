# dynkin/nn/network.py
from __future__ import annotations
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

IDENTITY = "identity"
TANH = "tanh"


def parse_activation(tag: str) -> tuple[str, int]:
    """'tanh' | 'identity' | 'groupsort:s' -> (kind, group size)."""
    if tag in (TANH, IDENTITY):
        return tag, 0
    if tag.startswith("groupsort:"):
        s = int(tag.split(":", 1)[1])
        if s < 1:
            raise ValueError(f"group size must be >= 1 in '{tag}'")
        return "groupsort", s
    raise ValueError(f"unknown activation '{tag}'")


def groupsort(v, s: int) -> np.ndarray:
    """Sort consecutive blocks of s entries (last axis) in decreasing order."""
    v = np.asarray(v, dtype=float)
    k = v.shape[-1]
    if s < 1 or k % s:
        raise ValueError(f"group size {s} does not divide width {k}")
    g = v.reshape(v.shape[:-1] + (k // s, s))
    return -np.sort(-g, axis=-1).reshape(v.shape)


def _groupsort_order(z: np.ndarray, s: int) -> np.ndarray:
    g = z.reshape(z.shape[:-1] + (z.shape[-1] // s, s))
    return np.argsort(-g, axis=-1, kind="stable")


@dataclass(frozen=True, eq=False)
class Layer:
    weight: np.ndarray   # (out, in)
    bias: np.ndarray     # (out,)
    activation: str = TANH


@dataclass(frozen=True)
class LipschitzScaling:
    """Output γβΦ((x + α)/β) of a 1-Lipschitz Φ; biases bounded by ζ."""
    gamma: float = 1.0
    alpha: float = 0.0
    beta: float = 1.0
    zeta: float = 1.0


@dataclass(frozen=True, eq=False)
class FeedforwardNet:
    layers: tuple[Layer, ...]
    scaling: Optional[LipschitzScaling] = None

    def __post_init__(self):
        if not self.layers:
            raise ValueError("network needs at least one layer")
        for a, b in zip(self.layers, self.layers[1:]):
            if b.weight.shape[1] != a.weight.shape[0]:
                raise ValueError(f"layer widths do not chain: {a.weight.shape} -> {b.weight.shape}")
        for layer in self.layers:
            if layer.bias.shape != (layer.weight.shape[0],):
                raise ValueError("bias length must equal layer output width")
            kind, s = parse_activation(layer.activation)
            if kind == "groupsort" and layer.weight.shape[0] % s:
                raise ValueError(f"group size {s} does not divide width {layer.weight.shape[0]}")
        if self.layers[-1].activation != IDENTITY:
            raise ValueError("output layer must use the identity activation")
        if self.layers[-1].weight.shape[0] != 1:
            raise ValueError("output dimension must be 1")

    @property
    def input_dim(self) -> int:
        return self.layers[0].weight.shape[1]

    @property
    def n_parameters(self) -> int:
        return sum(L.weight.size + L.bias.size for L in self.layers)

    def parameters(self) -> np.ndarray:
        return np.concatenate([np.concatenate([L.weight.ravel(), L.bias]) for L in self.layers])

    def with_parameters(self, theta) -> "FeedforwardNet":
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.n_parameters,):
            raise ValueError(f"expected {self.n_parameters} parameters, got {theta.shape}")
        layers, k = [], 0
        for L in self.layers:
            nw, nb = L.weight.size, L.bias.size
            W = theta[k:k + nw].reshape(L.weight.shape)
            b = theta[k + nw:k + nw + nb]
            layers.append(replace(L, weight=W.copy(), bias=b.copy()))
            k += nw + nb
        return replace(self, layers=tuple(layers))


def init_network(widths: Sequence[int], hidden_activation: str = TANH,
                 rng: Optional[np.random.Generator] = None) -> FeedforwardNet:
    """Uniform ±1/√fan_in weights and biases; identity on the last layer."""
    rng = rng if rng is not None else np.random.default_rng(0)
    if len(widths) < 2:
        raise ValueError("widths needs input and output sizes")
    layers = []
    for j, (n_in, n_out) in enumerate(zip(widths[:-1], widths[1:])):
        bound = 1.0 / np.sqrt(n_in)
        act = IDENTITY if j == len(widths) - 2 else hidden_activation
        layers.append(Layer(rng.uniform(-bound, bound, (n_out, n_in)), rng.uniform(-bound, bound, n_out), act))
    return FeedforwardNet(tuple(layers))


def _as_inputs(net: FeedforwardNet, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    X = x.reshape(-1, 1) if net.input_dim == 1 and x.ndim <= 1 else np.atleast_2d(x)
    if X.shape[1] != net.input_dim:
        raise ValueError(f"input has {X.shape[1]} features, network expects {net.input_dim}")
    if net.scaling is not None:
        X = (X + net.scaling.alpha) / net.scaling.beta
    return X


def _activate(kind: str, s: int, z: np.ndarray) -> np.ndarray:
    if kind == TANH:
        return np.tanh(z)
    if kind == "groupsort":
        return groupsort(z, s)
    return z


def _output_scale(net: FeedforwardNet) -> float:
    return 1.0 if net.scaling is None else net.scaling.gamma * net.scaling.beta


def forward(net: FeedforwardNet, x) -> np.ndarray:
    """Network output at every input point, shape (K,)."""
    H = _as_inputs(net, x)
    for L in net.layers:
        kind, s = parse_activation(L.activation)
        H = _activate(kind, s, H @ L.weight.T + L.bias)
    return _output_scale(net) * H[:, 0]


def jacobian(net: FeedforwardNet, x) -> tuple[np.ndarray, np.ndarray]:
    """(outputs (K,), d outputs / d parameters (K, P)) by back-propagation."""
    H = _as_inputs(net, x)
    inputs, pre = [], []
    for L in net.layers:
        kind, s = parse_activation(L.activation)
        Z = H @ L.weight.T + L.bias
        inputs.append(H)
        pre.append(Z)
        H = _activate(kind, s, Z)
    out = H[:, 0]
    K = H.shape[0]
    blocks = []
    delta = np.ones((K, 1))       # d out / d activation of the last layer
    for j in range(len(net.layers) - 1, -1, -1):
        L = net.layers[j]
        kind, s = parse_activation(L.activation)
        Z = pre[j]
        if kind == TANH:
            delta = delta * (1.0 - np.tanh(Z) ** 2)
        elif kind == "groupsort":
            order = _groupsort_order(Z, s)
            dg = delta.reshape(order.shape)
            back = np.zeros_like(dg)
            np.put_along_axis(back, order, dg, axis=-1)
            delta = back.reshape(Z.shape)
        dW = delta[:, :, None] * inputs[j][:, None, :]
        blocks.append(np.concatenate([dW.reshape(K, -1), delta], axis=1))
        delta = delta @ L.weight
    scale = _output_scale(net)
    return scale * out, scale * np.concatenate(blocks[::-1], axis=1)


def _norm_2inf(W: np.ndarray) -> float:
    return float(np.max(np.linalg.norm(W, axis=1)))


def _norm_inf(W: np.ndarray) -> float:
    return float(np.max(np.abs(W).sum(axis=1)))


def lipschitz_project(net: FeedforwardNet, zeta: float) -> FeedforwardNet:
    """Rescale weights so the unscaled map is 1-Lipschitz; clip biases to [−ζ, ζ].

    First layer: max row 2-norm <= 1. Later layers: max absolute row sum <= 1.
    """
    for L in net.layers[:-1]:
        if parse_activation(L.activation)[0] != "groupsort":
            raise ValueError("lipschitz_project needs groupsort hidden activations")
    layers = []
    for j, L in enumerate(net.layers):
        norm = _norm_2inf(L.weight) if j == 0 else _norm_inf(L.weight)
        W = L.weight / norm if norm > 1.0 else L.weight.copy()
        layers.append(replace(L, weight=W, bias=np.clip(L.bias, -zeta, zeta)))
    return replace(net, layers=tuple(layers))
