"""Structural operators on networks with exact realization semantics.

Every operator builds a new :class:`~picardnet.network.Network` from its
inputs by explicit weight manipulation; nothing is evaluated numerically.
Composition fuses exactly one layer boundary (the last layer of the inner
network with the first layer of the outer one) and performs no other
simplification, so parameter counts follow the structural definitions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .network import Activation, Layer, Network
from .weights import LowRank, Weight, as_weight, block_diag, matmul

__all__ = [
    "IdentityNet",
    "LeakyToRelu",
    "activation_net",
    "affine",
    "compose",
    "extend",
    "identity_net",
    "parallel_general",
    "parallel_same",
    "power",
    "relu_from_leaky",
    "relu_net_from_leaky",
    "scale",
    "stacking_net",
    "sum_diff",
    "sum_same",
    "summation_net",
    "time_shift",
]


def _matvec(w: Weight, v: np.ndarray) -> np.ndarray:
    if isinstance(w, LowRank):
        return w.left @ (w.right @ v)
    return w @ v


def _identity(n: int) -> sp.csr_array:
    return sp.identity(n, format="csr", dtype=np.float64)


def affine(weight, bias=None) -> Network:
    """Single-layer network realizing ``x -> weight @ x + bias`` for every activation."""
    w = as_weight(np.atleast_2d(weight) if not sp.issparse(weight) else weight)
    b = np.zeros(w.shape[0]) if bias is None else np.atleast_1d(np.asarray(bias, dtype=float))
    return Network([Layer.make(w, b)])


def activation_net(d: int) -> Network:
    """Two identity layers; realizes the componentwise activation on ``R^d``."""
    eye = _identity(d)
    return Network([Layer.make(eye, np.zeros(d)), Layer.make(eye, np.zeros(d))])


def compose(phi: Network, psi: Network) -> Network:
    """Network realizing ``phi o psi``; depth is ``depth(phi) + depth(psi) - 1``."""
    if phi.input_dim != psi.output_dim:
        raise ValueError(
            f"cannot compose: outer network takes {phi.input_dim} inputs, "
            f"inner network returns {psi.output_dim}"
        )
    first = phi.layers[0]
    last = psi.layers[-1]
    fused = Layer.make(
        matmul(first.weight, last.weight),
        _matvec(first.weight, last.bias) + first.bias,
    )
    return Network(psi.layers[:-1] + (fused,) + phi.layers[1:])


def power(phi: Network, n: int) -> Network:
    """``n``-fold self-composition; ``n = 0`` gives the identity affine map."""
    if phi.input_dim != phi.output_dim:
        raise ValueError("power needs a network with equal input and output dimensions")
    if n < 0:
        raise ValueError("power exponent must be nonnegative")
    if n == 0:
        return affine(_identity(phi.input_dim))
    out = phi
    for _ in range(n - 1):
        out = compose(phi, out)
    return out


@dataclass(frozen=True)
class IdentityNet:
    """A one-hidden-layer network realizing the identity on the real line."""

    net: Network
    width: int

    def __post_init__(self) -> None:
        if self.net.input_dim != 1 or self.net.output_dim != 1 or self.net.depth != 2:
            raise ValueError("an identity net must have dimensions (1, width, 1)")


def identity_net(act: Activation) -> IdentityNet:
    """Width-2 identity network for relu, leaky relu or softplus.

    Uses ``x = c * (a(x) - a(-x))`` where ``c = 1 / (1 + alpha)`` for leaky
    units (``alpha = 0`` for relu) and ``c = 1`` for softplus.
    """
    if act.kind == "softplus":
        c = 1.0
    elif act.kind in ("relu", "leaky_relu"):
        c = 1.0 / (1.0 + act.slope)
    else:
        raise ValueError(f"no identity network for activation {act.kind!r}")
    net = Network.from_arrays([([[1.0], [-1.0]], [0.0, 0.0]), ([[c, -c]], [0.0])])
    return IdentityNet(net, 2)


def extend(phi: Network, depth: int, j: IdentityNet) -> Network:
    """Pad ``phi`` with identity networks after its output to reach ``depth``."""
    if phi.output_dim != j.net.input_dim:
        raise ValueError("extension needs the network output to match the identity net")
    if depth < phi.depth:
        raise ValueError(f"cannot extend a depth-{phi.depth} network to depth {depth}")
    return compose(power(j.net, depth - phi.depth), phi)


def parallel_same(nets: Sequence[Network]) -> Network:
    """Run equal-depth networks side by side on concatenated inputs."""
    nets = list(nets)
    if not nets:
        raise ValueError("parallelization needs at least one network")
    depth = nets[0].depth
    if any(n.depth != depth for n in nets):
        raise ValueError(f"parallel_same needs equal depths, got {[n.depth for n in nets]}")
    layers = []
    for k in range(depth):
        weight = block_diag([n.layers[k].weight for n in nets])
        bias = np.concatenate([n.layers[k].bias for n in nets])
        layers.append(Layer.make(weight, bias))
    return Network(layers)


def parallel_general(nets: Sequence[Network], j: IdentityNet) -> Network:
    """Extend every network to the largest depth, then run them side by side."""
    nets = list(nets)
    target = max(n.depth for n in nets)
    return parallel_same([extend(n, target, j) for n in nets])


def scale(lam: float, phi: Network) -> Network:
    """Network realizing ``lam * phi``; only the last layer changes."""
    return compose(affine(float(lam) * _identity(phi.output_dim)), phi)


def summation_net(m: int, n: int) -> Network:
    """Affine map ``R^{mn} -> R^m`` adding ``n`` consecutive blocks."""
    return affine(sp.hstack([_identity(m)] * n, format="csr"))


def stacking_net(m: int, n: int) -> Network:
    """Affine map ``R^m -> R^{mn}`` copying its input ``n`` times."""
    return affine(sp.vstack([_identity(m)] * n, format="csr"))


def sum_same(nets: Sequence[Network]) -> Network:
    """Pointwise sum of equal-depth networks sharing input and output sizes."""
    nets = list(nets)
    if not nets:
        raise ValueError("a sum needs at least one network")
    first = nets[0]
    for n in nets[1:]:
        if (n.depth, n.input_dim, n.output_dim) != (first.depth, first.input_dim, first.output_dim):
            raise ValueError("sum_same needs equal depth, input and output dimensions")
    count = len(nets)
    stacked = compose(parallel_same(nets), stacking_net(first.input_dim, count))
    return compose(summation_net(first.output_dim, count), stacked)


def sum_diff(nets: Sequence[Network], j: IdentityNet) -> Network:
    """Pointwise sum of scalar-output networks of possibly different depths."""
    nets = list(nets)
    if not nets:
        raise ValueError("a sum needs at least one network")
    if len({n.input_dim for n in nets}) != 1:
        raise ValueError("sum_diff needs equal input dimensions")
    if any(n.output_dim != j.net.input_dim for n in nets):
        raise ValueError("sum_diff needs outputs matching the identity network")
    target = max(n.depth for n in nets)
    return sum_same([extend(n, target, j) for n in nets])


@dataclass(frozen=True)
class LeakyToRelu:
    """``max(x, 0) = sum_i coefficients[i] * leaky(scalings[i] * x)``."""

    coefficients: tuple[float, float]
    scalings: tuple[float, float]


def relu_from_leaky(alpha: float) -> LeakyToRelu:
    """Express the relu through two leaky units with slope ``alpha``."""
    if alpha in (-1.0, 1.0) or not np.isfinite(alpha):
        raise ValueError(f"leaky slope must be finite and not +-1, got {alpha}")
    sign = abs(1.0 - alpha) / (1.0 - alpha)
    pref = abs(1.0 - alpha) / ((1.0 - alpha) * (1.0 - alpha**2))
    return LeakyToRelu(coefficients=(alpha * pref, pref), scalings=(-sign, sign))


def relu_net_from_leaky(d: int, alpha: float) -> Network:
    """Network that, under the leaky activation, realizes the relu on ``R^d``."""
    conv = relu_from_leaky(alpha)
    eye = _identity(d)
    first = sp.vstack([conv.scalings[0] * eye, conv.scalings[1] * eye], format="csr")
    second = sp.hstack([conv.coefficients[0] * eye, conv.coefficients[1] * eye], format="csr")
    return Network([Layer.make(first, np.zeros(2 * d)), Layer.make(second, np.zeros(d))])


def time_shift(f: Network, horizon: float, c: float, j: IdentityNet) -> Network:
    """Network ``g`` with ``g(s, x) = f(horizon + c * s, x)``; time is the first input."""
    if f.input_dim < 2:
        raise ValueError("time_shift needs a network on (time, space) inputs")
    clock = affine([[float(c)]], [float(horizon)])
    heads = [clock] + [j.net] * (f.input_dim - 1)
    return compose(f, parallel_general(heads, j))
