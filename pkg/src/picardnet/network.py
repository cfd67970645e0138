"""Networks as explicit (weight, bias) sequences, their bookkeeping and realization."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .weights import LowRank, Weight, as_weight, nnz, stages, to_dense, weight_shape

__all__ = [
    "Activation",
    "Layer",
    "Network",
    "NetworkDims",
    "RELU",
    "SOFTPLUS",
    "IDENTITY",
    "apply_activation",
    "dims",
    "leaky",
    "network_function",
    "realize",
    "realize_shallow",
    "scalar_map",
]

_KINDS = {
    "identity": _kernels.ACT_IDENTITY,
    "relu": _kernels.ACT_RELU,
    "leaky_relu": _kernels.ACT_LEAKY,
    "softplus": _kernels.ACT_SOFTPLUS,
}


@dataclass(frozen=True)
class Activation:
    """One of the four scalar activations, applied componentwise.

    ``alpha`` is the negative-side slope and is only meaningful for
    ``leaky_relu``, where ``alpha`` must avoid -1 and 1.
    """

    kind: str
    alpha: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown activation kind {self.kind!r}")
        if self.kind == "leaky_relu":
            if not np.isfinite(self.alpha) or self.alpha in (-1.0, 1.0):
                raise ValueError(f"leaky slope must be finite and not +-1, got {self.alpha}")
        elif self.alpha != 0.0:
            raise ValueError(f"alpha is only used by leaky_relu, got {self.alpha} for {self.kind}")

    @property
    def code(self) -> int:
        return _KINDS[self.kind]

    @property
    def slope(self) -> float:
        """Negative-side slope viewed as a leaky unit (0 for relu)."""
        return self.alpha if self.kind == "leaky_relu" else 0.0

    def to_dict(self) -> dict:
        if self.kind == "leaky_relu":
            return {"kind": self.kind, "alpha": self.alpha}
        return {"kind": self.kind}

    @classmethod
    def from_dict(cls, data: dict) -> Activation:
        return cls(str(data["kind"]), float(data.get("alpha", 0.0)))

    @classmethod
    def parse(cls, text: str) -> Activation:
        """Parse ``relu``, ``softplus``, ``identity`` or ``leaky_relu:0.5``."""
        name, _, arg = text.partition(":")
        if name in ("leaky", "leaky_relu"):
            return cls("leaky_relu", float(arg) if arg else 0.5)
        if arg:
            raise ValueError(f"activation {name!r} takes no parameter")
        return cls(name)


RELU = Activation("relu")
SOFTPLUS = Activation("softplus")
IDENTITY = Activation("identity")


def leaky(alpha: float) -> Activation:
    return Activation("leaky_relu", alpha)


@dataclass(frozen=True)
class Layer:
    """One affine map ``x -> weight @ x + bias``."""

    weight: Weight
    bias: np.ndarray

    @classmethod
    def make(cls, weight, bias) -> Layer:
        w = as_weight(weight)
        b = np.array(bias, dtype=np.float64).reshape(-1)
        if b.shape[0] != w.shape[0]:
            raise ValueError(f"bias length {b.shape[0]} does not match {w.shape[0]} weight rows")
        if min(w.shape) < 1:
            raise ValueError("every width must be at least 1")
        b.setflags(write=False)
        return cls(w, b)

    @property
    def shape(self) -> tuple[int, int]:
        return weight_shape(self.weight)

    def dense_weight(self) -> np.ndarray:
        return to_dense(self.weight)


@dataclass(frozen=True)
class NetworkDims:
    widths: tuple[int, ...]
    depth: int
    hidden_count: int
    param_count: int
    input_dim: int
    output_dim: int

    @property
    def max_width(self) -> int:
        """The max-norm of the widths vector."""
        return max(self.widths)


class Network:
    """A nonempty sequence of dimension-compatible affine layers.

    Instances are immutable; every calculus operation returns a new network.
    """

    __slots__ = ("_layers", "_flat")

    def __init__(self, layers: Sequence[Layer]):
        layers = tuple(layers)
        if not layers:
            raise ValueError("a network needs at least one layer")
        for k in range(1, len(layers)):
            if layers[k].shape[1] != layers[k - 1].shape[0]:
                raise ValueError(
                    f"layer {k} expects {layers[k].shape[1]} inputs but layer {k - 1} "
                    f"produces {layers[k - 1].shape[0]}"
                )
        self._layers = layers
        self._flat = None

    @classmethod
    def from_arrays(cls, pairs: Sequence[tuple]) -> Network:
        """Build from ``[(W_1, B_1), ..., (W_L, B_L)]`` with array-like entries."""
        return cls([Layer.make(w, b) for w, b in pairs])

    @property
    def layers(self) -> tuple[Layer, ...]:
        return self._layers

    @property
    def depth(self) -> int:
        return len(self._layers)

    @property
    def input_dim(self) -> int:
        return self._layers[0].shape[1]

    @property
    def output_dim(self) -> int:
        return self._layers[-1].shape[0]

    @property
    def widths(self) -> tuple[int, ...]:
        return (self.input_dim,) + tuple(layer.shape[0] for layer in self._layers)

    @property
    def param_count(self) -> int:
        w = self.widths
        return sum(w[k] * (w[k - 1] + 1) for k in range(1, len(w)))

    @property
    def stored_count(self) -> int:
        """Stored nonzero weights plus all biases (the optimized count)."""
        return sum(nnz(layer.weight) + layer.bias.shape[0] for layer in self._layers)

    @property
    def density(self) -> float:
        return self.stored_count / self.param_count

    def has_factored_layers(self) -> bool:
        return any(isinstance(layer.weight, LowRank) for layer in self._layers)

    def __repr__(self) -> str:
        return f"Network(widths={self.widths}, params={self.param_count})"

    def _flatten(self):
        if self._flat is None:
            indptr, indices, data, bias = [], [], [], []
            rows, ptr_off, nz_off, bias_off, act = [], [], [], [], []
            p_acc = n_acc = b_acc = 0
            last = self.depth - 1
            for k, layer in enumerate(self._layers):
                parts = stages(layer.weight)
                for s, mat in enumerate(parts):
                    final_part = s == len(parts) - 1
                    rows.append(mat.shape[0])
                    ptr_off.append(p_acc)
                    nz_off.append(n_acc)
                    indptr.append(mat.indptr.astype(np.int64))
                    indices.append(mat.indices.astype(np.int64))
                    data.append(mat.data.astype(np.float64))
                    p_acc += mat.shape[0] + 1
                    n_acc += mat.nnz
                    if final_part:
                        bias_off.append(b_acc)
                        bias.append(layer.bias)
                        b_acc += layer.bias.shape[0]
                        act.append(1 if k < last else 0)
                    else:
                        bias_off.append(-1)
                        act.append(0)
            widths = [self.input_dim] + rows
            self._flat = (
                np.concatenate(indptr),
                np.concatenate(indices),
                np.concatenate(data),
                np.concatenate(bias),
                np.array(rows, dtype=np.int64),
                np.array(ptr_off, dtype=np.int64),
                np.array(nz_off, dtype=np.int64),
                np.array(bias_off, dtype=np.int64),
                np.array(act, dtype=np.int8),
                int(max(widths)),
            )
        return self._flat


def dims(net: Network) -> NetworkDims:
    """Widths, depth, hidden-layer count and parameter count of ``net``."""
    return NetworkDims(
        widths=net.widths,
        depth=net.depth,
        hidden_count=net.depth - 1,
        param_count=net.param_count,
        input_dim=net.input_dim,
        output_dim=net.output_dim,
    )


def apply_activation(act: Activation, v) -> np.ndarray:
    """Apply ``act`` to every entry of ``v``."""
    arr = np.asarray(v, dtype=np.float64)
    return _kernels.activate_array(np.ascontiguousarray(arr), act.code, float(act.slope))


_CHUNK = 65536


def realize(net: Network, act: Activation, x) -> np.ndarray:
    """Evaluate the function computed by ``net`` with activation ``act``.

    ``x`` is a single input vector of length ``net.input_dim`` or a batch of
    shape ``(n, input_dim)``.  The activation is applied after every layer
    except the last.
    """
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    batch = arr.reshape(1, -1) if single else arr
    if batch.ndim != 2 or batch.shape[1] != net.input_dim:
        raise ValueError(
            f"input has shape {arr.shape}; the network expects {net.input_dim} features"
        )
    flat = net._flatten()
    code, alpha = act.code, float(act.slope)
    if batch.shape[0] <= _CHUNK:
        out = _kernels.forward(np.ascontiguousarray(batch), *flat[:-1], code, alpha, flat[-1])
    else:
        out = np.empty((batch.shape[0], net.output_dim))
        for start in range(0, batch.shape[0], _CHUNK):
            part = np.ascontiguousarray(batch[start : start + _CHUNK])
            out[start : start + _CHUNK] = _kernels.forward(
                part, *flat[:-1], code, alpha, flat[-1]
            )
    return out[0] if single else out


def network_function(net: Network, act: Activation) -> Callable[[np.ndarray], np.ndarray]:
    """Wrap a scalar-output network as a batched callable ``(n, d) -> (n,)``."""
    if net.output_dim != 1:
        raise ValueError("network_function needs a scalar-output network")

    def fn(points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts.reshape(-1, net.input_dim)
        return realize(net, act, pts)[:, 0]

    return fn


def scalar_map(net: Network, act: Activation) -> Callable[[np.ndarray], np.ndarray]:
    """Wrap a network on ``R -> R`` as an elementwise map preserving array shape."""
    if net.input_dim != 1 or net.output_dim != 1:
        raise ValueError("scalar_map needs a network from R to R")

    def fn(u) -> np.ndarray:
        arr = np.asarray(u, dtype=np.float64)
        return realize(net, act, arr.reshape(-1, 1))[:, 0].reshape(arr.shape)

    return fn


def realize_shallow(net: Network, act: Activation, x) -> np.ndarray:
    """Evaluate a one-hidden-layer network by grouping hidden units by direction.

    Every hidden unit computes ``act(w_u . x + b_u)``.  Units whose weight rows
    are multiples of a common direction ``e`` are written as
    ``act(lam_u * (e . x) + b_u)``, so each group only needs one activation per
    distinct value of ``e . x``.  On tensor grids the number of distinct
    projections is tiny compared with the number of points, which makes this
    much faster than :func:`realize` while computing the same function (only
    the floating-point summation order differs).
    """
    if net.depth != 2:
        raise ValueError("realize_shallow needs a network with exactly one hidden layer")
    pts = np.asarray(x, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != net.input_dim:
        raise ValueError(f"input has shape {pts.shape}; the network expects {net.input_dim} features")
    first, last = net.layers
    w1 = first.dense_weight()
    w2 = last.dense_weight()
    out = np.tile(last.bias, (pts.shape[0], 1))
    groups: dict[tuple[float, ...], list[tuple[int, float]]] = {}
    const = np.zeros(net.output_dim)
    for u, row in enumerate(w1):
        nz = np.flatnonzero(row)
        if nz.size == 0:
            const += w2[:, u] * apply_activation(act, np.array([first.bias[u]]))[0]
            continue
        lam = row[nz[0]]
        groups.setdefault(tuple(row / lam), []).append((u, lam))
    out += const
    for direction, members in groups.items():
        proj = pts @ np.array(direction)
        values, inverse = np.unique(proj, return_inverse=True)
        units = np.array([u for u, _ in members])
        lams = np.array([lam for _, lam in members])
        hidden = apply_activation(act, values[:, None] * lams[None, :] + first.bias[units][None, :])
        out += (hidden @ w2[:, units].T)[inverse.reshape(-1)]
    return out
