"""Translate multilevel Picard estimators into explicit networks.

:func:`compile_fixed_time` mirrors the estimator's recursion node by node:
terminal samples become copies of the terminal network behind a constant
shift, every correction term becomes the nonlinearity network stacked on the
compiled child estimator, and the pieces are added with the depth-adjusting
sum.  The random draws come from the same helpers that drive
:func:`~picardnet.mlp.mlp_estimate`, so both agree for every input.

:func:`compile_space_time` multiplies hat functions in time with fixed-time
networks on a uniform grid through a product gadget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .calculus import (
    IdentityNet,
    affine,
    compose,
    parallel_general,
    scale,
    sum_diff,
    sum_same,
    time_shift,
)
from .gadgets import GadgetBudget, HatSpec, hat_network, product_net
from .mlp import MlpParams, level_draws, terminal_draws
from .network import Activation, Network
from .random_field import MultiIndex, RandomField

__all__ = [
    "CompiledFixedTime",
    "CompiledSpaceTime",
    "compile_fixed_time",
    "compile_space_time",
    "default_gadget_q",
    "fixed_time_depth_bound",
    "fixed_time_width_bound",
    "grid_times",
    "interpolate_in_time",
    "space_time_deviation_bound",
    "space_time_param_bound",
    "to_initial_value",
    "transform_param_bound",
]


@dataclass(frozen=True)
class CompiledFixedTime:
    """Network realizing ``x -> U_n^theta(t, x)`` together with its provenance."""

    net: Network
    params: MlpParams
    theta: MultiIndex
    seed: int
    activation: Activation

    def provenance(self) -> dict:
        return {
            "mode": "fixed",
            "n": self.params.n,
            "M": self.params.M,
            "T": self.params.T,
            "t": self.params.t,
            "d": self.params.d,
            "theta": list(self.theta.path),
            "seed": self.seed,
            "activation": self.activation.to_dict(),
        }


def _shift(d: int, shift: np.ndarray) -> Network:
    return affine(np.eye(d), shift)


def _zero_net(d: int) -> Network:
    return affine(np.zeros((1, d)), [0.0])


def _compile_node(
    n: int,
    M: int,
    key: np.uint64,
    t: float,
    g_net: Network,
    f_net: Network,
    j: IdentityNet,
    field: RandomField,
) -> Network:
    d = field.dim
    if n == 0:
        return _zero_net(d)
    keys = np.array([key], dtype=np.uint64)
    times = np.array([t])
    count = M**n
    shifts = terminal_draws(field, keys, times, count)[0]
    terminal = sum_same([scale(1.0 / count, compose(g_net, _shift(d, w))) for w in shifts])
    plus, minus = [], []
    for i in range(n):
        count = M ** (n - i)
        draws = level_draws(field, keys, times, i, count)
        new_terms, old_terms = [], []
        for k in range(count):
            tk = float(draws.times[k])
            shift = _shift(d, draws.shifts[k])
            child = _compile_node(i, M, draws.keys[k], tk, g_net, f_net, j, field)
            new_terms.append(compose(compose(f_net, child), shift))
            prev = _compile_node(max(i - 1, 0), M, draws.prev_keys[k], tk, g_net, f_net, j, field)
            old_terms.append(compose(compose(f_net, prev), shift))
        weight = (field.horizon - t) / count
        plus.append(scale(weight, sum_diff(new_terms, j)))
        minus.append(scale(-weight * (1.0 if i >= 1 else 0.0), sum_diff(old_terms, j)))
    return sum_diff([terminal, sum_diff(plus, j), sum_diff(minus, j)], j)


def _check_inputs(g_net: Network, f_net: Network, j: IdentityNet, d: int) -> None:
    if g_net.input_dim != d or g_net.output_dim != 1:
        raise ValueError(f"terminal network must map R^{d} to R, got {g_net.input_dim} -> {g_net.output_dim}")
    if f_net.input_dim != 1 or f_net.output_dim != 1:
        raise ValueError("nonlinearity network must map R to R")
    if j.net.input_dim != 1:
        raise ValueError("identity network must act on R")


def compile_fixed_time(
    params: MlpParams,
    theta: MultiIndex,
    g_net: Network,
    f_net: Network,
    j: IdentityNet,
    field: RandomField,
    act: Activation,
) -> CompiledFixedTime:
    """Network whose realization equals the estimator at fixed ``t`` for every ``x``.

    ``g_net`` and ``f_net`` play the roles of ``g`` and ``f``; with
    ``g = realize(g_net)`` and ``f = realize(f_net)`` under ``act`` the result
    reproduces :func:`~picardnet.mlp.mlp_estimate` exactly (up to rounding).
    """
    if field.dim != params.d or field.horizon != params.T:
        raise ValueError("random field dimension and horizon must match the parameters")
    _check_inputs(g_net, f_net, j, params.d)
    net = _compile_node(params.n, params.M, field.key(theta), float(params.t), g_net, f_net, j, field)
    return CompiledFixedTime(net, params, theta, field.seed, act)


def fixed_time_width_bound(n: int, M: int, j_width: int, f_net: Network, g_net: Network) -> int:
    """``max(identity width, max width of f, max width of g) * (3M)^n``."""
    return max(j_width, max(f_net.widths), max(g_net.widths)) * (3 * M) ** n


def fixed_time_depth_bound(n: int, j_depth: int, f_net: Network, g_net: Network) -> int:
    """``max(identity depth, depth of g) + n * (hidden layers of f)``."""
    return max(j_depth, g_net.depth) + n * (f_net.depth - 1)


# ---------------------------------------------------------------------------
# Space-time networks
# ---------------------------------------------------------------------------


def grid_times(T: float, K: int) -> np.ndarray:
    """Uniform grid ``k T / K`` for ``k = 0..K``."""
    return np.array([k * T / K for k in range(K + 1)])


def _grid_hats(T: float, K: int) -> list[HatSpec]:
    ext = [-T / K] + list(grid_times(T, K)) + [T + T / K]
    return [HatSpec(ext[k], ext[k + 1], ext[k + 2]) for k in range(K + 1)]


def default_gadget_q(gamma: float) -> float:
    """Exponent in ``{2.5, 3, ..., 20}`` giving the narrowest product gadget for ``gamma``."""

    def width(q: float) -> float:
        budget = GadgetBudget(gamma / (2.0 ** (q - 1) + 1.0), q)
        return math.ceil(0.5 / math.sqrt(budget.delta))

    return min((2.5 + 0.5 * i for i in range(36)), key=lambda q: (width(q), q))


@dataclass(frozen=True)
class CompiledSpaceTime:
    """Network realizing ``(t, x) -> sum_k Gamma(hat_k(t), U_n(t_k, x))``."""

    net: Network
    params: MlpParams
    K: int
    gamma: float
    gadget_q: float
    theta: MultiIndex
    seed: int
    activation: Activation
    product: Network
    hats: tuple[Network, ...]
    branches: tuple[Network, ...]

    @property
    def times(self) -> np.ndarray:
        return grid_times(self.params.T, self.K)

    def provenance(self) -> dict:
        return {
            "mode": "spacetime",
            "n": self.params.n,
            "M": self.params.M,
            "T": self.params.T,
            "d": self.params.d,
            "K": self.K,
            "gamma": self.gamma,
            "gadget_q": self.gadget_q,
            "theta": list(self.theta.path),
            "seed": self.seed,
            "activation": self.activation.to_dict(),
        }


def compile_space_time(
    params: MlpParams,
    K: int,
    gamma: float,
    theta: MultiIndex,
    g_net: Network,
    f_net: Network,
    j: IdentityNet,
    act: Activation,
    field: RandomField,
    gadget_q: float | None = None,
) -> CompiledSpaceTime:
    """Space-time network on ``R^(d+1)`` (time first) built from ``K + 1`` grid branches.

    ``params.t`` is ignored: branch ``k`` compiles the estimator at
    ``t_k = k T / K`` with the shared root index ``theta``.  Hats have
    ghost knots one grid step outside ``[0, T]``; the product gadget has
    accuracy ``gamma`` with exponent ``gadget_q`` (chosen by
    :func:`default_gadget_q` when omitted).
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    q = default_gadget_q(gamma) if gadget_q is None else float(gadget_q)
    product = product_net(GadgetBudget(gamma, q), act)
    hats = tuple(hat_network(h, act, eps=gamma, q=q) for h in _grid_hats(params.T, K))
    branches = []
    for k, tk in enumerate(grid_times(params.T, K)):
        p_k = MlpParams(params.n, params.M, params.T, float(tk), params.d)
        u_k = compile_fixed_time(p_k, theta, g_net, f_net, j, field, act).net
        branches.append(compose(product, parallel_general([hats[k], u_k], j)))
    net = sum_diff(branches, j)
    return CompiledSpaceTime(
        net, params, K, gamma, q, theta, field.seed, act, product, hats, tuple(branches)
    )


def interpolate_in_time(values: np.ndarray, T: float, t: np.ndarray) -> np.ndarray:
    """Piecewise-linear interpolation in time of grid values.

    ``values`` has shape ``(K + 1, m)``: grid value ``k`` at point ``i``.
    ``t`` has shape ``(m,)``.
    """
    values = np.asarray(values, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    K = values.shape[0] - 1
    if K == 0:
        return values[0].copy()
    times = grid_times(T, K)
    k = np.clip(np.searchsorted(times, t, side="right"), 1, K)
    cols = np.arange(values.shape[1])
    left, right = values[k - 1, cols], values[k, cols]
    frac = np.clip((t - times[k - 1]) / (times[k] - times[k - 1]), 0.0, 1.0)
    return left + frac * (right - left)


def space_time_deviation_bound(gamma: float, q: float, T: float, grid_values: Sequence[float]) -> float:
    """``2 gamma (1 + (T+1)^q)^q sum_k (1 + |U_k|^q)`` for one point."""
    vals = np.abs(np.asarray(grid_values, dtype=np.float64))
    return 2.0 * gamma * (1.0 + (T + 1.0) ** q) ** q * float(np.sum(1.0 + vals**q))


def space_time_param_bound(
    n: int,
    M: int,
    K: int,
    j_width: int,
    f_net: Network,
    g_net: Network,
    product: Network,
    hats: Sequence[Network],
) -> float:
    """Closed-form size bound of the space-time network from measured inputs."""
    depth_term = max(j_width, g_net.depth) + f_net.depth
    width_term = max(j_width, max(f_net.widths), max(g_net.widths))
    hat_p = max(h.param_count for h in hats)
    return (
        16.0
        * depth_term
        * float(width_term) ** 2
        * (math.sqrt(n) * (3 * M) ** n) ** 2
        * float(product.param_count) ** 3
        * float(hat_p) ** 3
        * (K + 1) ** 2
        * j_width**2
    )


# ---------------------------------------------------------------------------
# Clock transforms
# ---------------------------------------------------------------------------


def transform_param_bound(j_width: int, d: int) -> int:
    """Per-transform size inflation factor ``96 w^2 d^2`` for identity width ``w``."""
    return 96 * j_width**2 * d**2


def to_initial_value(net: Network, T: float, diffusion: float, j: IdentityNet) -> Network:
    """Network ``(s, x) -> net(2 diffusion (T - s), x)``.

    The inner clock rescales time by ``2 * diffusion``; the outer clock reverses
    it on ``[0, T]``.  A terminal-value network with internal horizon
    ``2 diffusion T`` thus becomes an initial-value network on ``[0, T]``.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    if not diffusion > 0:
        raise ValueError("diffusion must be positive")
    rescaled = time_shift(net, 0.0, 2.0 * diffusion, j)
    return time_shift(rescaled, T, -1.0, j)
