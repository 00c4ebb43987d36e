"""Feedforward ReLU networks: evaluation, activation patterns and region-wise affine maps.

Hidden neurons are indexed layer-major: bit ``k`` of an activation pattern is
neuron ``k - offset(i)`` of hidden layer ``i``, with layers counted from the
input.  Every module that keys cells by pattern relies on this layout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionError

# An activation pattern is a tuple of 0/1 ints so it can key dictionaries.
Pattern = tuple


@dataclass(frozen=True)
class ArchitectureSpec:
    widths: tuple

    def __post_init__(self):
        widths = tuple(int(w) for w in self.widths)
        if len(widths) < 3:
            raise ValueError(f"need at least input, one hidden and output width, got {widths}")
        if any(w < 1 for w in widths):
            raise ValueError(f"all widths must be positive, got {widths}")
        object.__setattr__(self, "widths", widths)

    @property
    def n_hidden(self) -> int:
        return sum(self.widths[1:-1])


@dataclass(frozen=True)
class DenseLayer:
    weight: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        w = np.array(self.weight, dtype=np.float64, copy=True)
        b = np.array(self.bias, dtype=np.float64, copy=True).reshape(-1)
        if w.ndim != 2 or w.shape[0] != b.shape[0]:
            raise DimensionError(f"weight {w.shape} and bias {b.shape} disagree")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise ValueError("layer parameters must be finite")
        w.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "bias", b)


@dataclass(frozen=True)
class AffineRegionMap:
    matrix: np.ndarray
    offset: np.ndarray

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        return x @ self.matrix.T + self.offset


@dataclass(frozen=True)
class ReluNetwork:
    layers: tuple
    offsets: tuple = field(init=False, repr=False)

    def __post_init__(self):
        layers = tuple(self.layers)
        if len(layers) < 2:
            raise DimensionError("a network needs at least one hidden layer and an output layer")
        for prev, cur in zip(layers, layers[1:]):
            if cur.weight.shape[1] != prev.weight.shape[0]:
                raise DimensionError(
                    f"layer shapes do not chain: {prev.weight.shape} -> {cur.weight.shape}"
                )
        object.__setattr__(self, "layers", layers)
        offs = [0]
        for layer in layers[:-1]:
            offs.append(offs[-1] + layer.weight.shape[0])
        object.__setattr__(self, "offsets", tuple(offs))

    @property
    def widths(self) -> tuple:
        return (self.layers[0].weight.shape[1],) + tuple(l.weight.shape[0] for l in self.layers)

    @property
    def input_dim(self) -> int:
        return self.layers[0].weight.shape[1]

    @property
    def output_dim(self) -> int:
        return self.layers[-1].weight.shape[0]

    @property
    def hidden(self) -> tuple:
        return self.layers[:-1]

    @property
    def n_hidden(self) -> int:
        return self.offsets[-1]

    def neuron_index(self, k: int) -> tuple:
        """Map a flat pattern index to (hidden layer index, neuron index)."""
        for i in range(len(self.hidden)):
            if k < self.offsets[i + 1]:
                return i, k - self.offsets[i]
        raise IndexError(k)

    def with_params(self, params: Sequence[tuple]) -> "ReluNetwork":
        return ReluNetwork(tuple(DenseLayer(w, b) for w, b in params))

    def params(self) -> list:
        return [(l.weight, l.bias) for l in self.layers]


def from_arrays(weights: Sequence, biases: Sequence) -> ReluNetwork:
    return ReluNetwork(tuple(DenseLayer(w, b) for w, b in zip(weights, biases)))


INIT_SCHEMES = ("kaiming", "torch")


def init_network(spec: ArchitectureSpec | Sequence[int], seed: int, scheme: str = "kaiming") -> ReluNetwork:
    """Random network, deterministic in ``seed``.

    ``kaiming``: weights U(+-sqrt(6/fan_in)), biases U(+-0.01).
    ``torch``: the default ``nn.Linear`` init, weights and biases U(+-1/sqrt(fan_in)).
    """
    if not isinstance(spec, ArchitectureSpec):
        spec = ArchitectureSpec(tuple(spec))
    if scheme not in INIT_SCHEMES:
        raise ValueError(f"unknown init scheme {scheme!r}")
    rng = np.random.default_rng(seed)
    layers = []
    for fan_in, fan_out in zip(spec.widths, spec.widths[1:]):
        if scheme == "kaiming":
            w_bound, b_bound = np.sqrt(6.0 / fan_in), 0.01
        else:
            w_bound = b_bound = 1.0 / np.sqrt(fan_in)
        w = rng.uniform(-w_bound, w_bound, size=(fan_out, fan_in))
        b = rng.uniform(-b_bound, b_bound, size=fan_out)
        layers.append(DenseLayer(w, b))
    return ReluNetwork(tuple(layers))


def _check_input(net: ReluNetwork, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != net.input_dim:
        raise DimensionError(f"expected input dimension {net.input_dim}, got {x.shape[-1]}")
    if not np.all(np.isfinite(x)):
        raise ValueError("input must be finite")
    return x


def forward(net: ReluNetwork, x):
    """Evaluate the network at one point.

    Returns ``(output, preactivations, pattern)``; ``preactivations`` holds one
    vector per hidden layer and the pattern bit is 1 only for strictly positive
    preactivations.
    """
    x = _check_input(net, x)
    if x.ndim != 1:
        raise DimensionError("forward takes a single point; use forward_batch for arrays")
    out, pres = forward_batch(net, x[None, :])
    pres = [p[0] for p in pres]
    pattern = tuple(int(v) for p in pres for v in (p > 0))
    return out[0], pres, pattern


def forward_batch(net: ReluNetwork, X):
    """Vectorised forward pass over rows of ``X``; returns (outputs, hidden preactivations)."""
    a = _check_input(net, X)
    pres = []
    for layer in net.hidden:
        z = a @ layer.weight.T + layer.bias
        pres.append(z)
        a = np.maximum(z, 0.0)
    last = net.layers[-1]
    return a @ last.weight.T + last.bias, pres


def binary_state_vector(net: ReluNetwork, x) -> Pattern:
    return forward(net, x)[2]


def patterns_batch(net: ReluNetwork, X) -> np.ndarray:
    """Activation patterns of many points as an (N, h) uint8 array."""
    _, pres = forward_batch(net, X)
    return np.concatenate([(p > 0) for p in pres], axis=1).astype(np.uint8)


def input_jacobian(net: ReluNetwork, pattern) -> AffineRegionMap:
    """Affine map the network agrees with on the open region of ``pattern``."""
    bits = np.asarray(pattern, dtype=np.float64).reshape(-1)
    if bits.shape[0] != net.n_hidden:
        raise DimensionError(f"pattern length {bits.shape[0]} != hidden size {net.n_hidden}")
    m = net.input_dim
    A = np.eye(m)
    c = np.zeros(m)
    for i, layer in enumerate(net.hidden):
        mask = bits[net.offsets[i]:net.offsets[i + 1]]
        A = mask[:, None] * (layer.weight @ A)
        c = mask * (layer.weight @ c + layer.bias)
    last = net.layers[-1]
    return AffineRegionMap(last.weight @ A, last.weight @ c + last.bias)
