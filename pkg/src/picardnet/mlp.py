"""Multilevel Picard estimator for semilinear heat equations.

The estimator targets ``u`` solving ``du/dt + (1/2) Laplace(u) + f(u) = 0`` on
``[0, T) x R^d`` with ``u(T, .) = g``.  Level ``n`` at ``(t, x)`` combines a
Monte Carlo average of ``g(x + W_{T-t})`` over ``M^n`` paths with telescoped
corrections ``f(U_i) - f(U_{i-1})`` sampled at uniform times in ``[t, T]``.

The recursion is evaluated breadth-wise: all children of a node are
processed together, and every node carries a whole batch of spatial points
that share its random draws.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .random_field import MultiIndex, RandomField, child_keys

__all__ = [
    "LevelDraws",
    "MlpOverflowError",
    "MlpParams",
    "OVERFLOW_LIMIT",
    "level_draws",
    "mlp_estimate",
    "terminal_draws",
]

OVERFLOW_LIMIT = 1e15

ScalarField = Callable[[np.ndarray], np.ndarray]
ScalarMap = Callable[[np.ndarray], np.ndarray]


class MlpOverflowError(ArithmeticError):
    """Raised when an estimate leaves the representable working range."""


@dataclass(frozen=True)
class MlpParams:
    """Level ``n``, branching ``M``, horizon ``T``, evaluation time ``t`` and dimension ``d``."""

    n: int
    M: int
    T: float
    t: float
    d: int

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError("level n must be nonnegative")
        if self.M < 1:
            raise ValueError("branching M must be at least 1")
        if not self.T > 0:
            raise ValueError("horizon T must be positive")
        if not 0.0 <= self.t <= self.T:
            raise ValueError(f"t must lie in [0, {self.T}], got {self.t}")
        if self.d < 1:
            raise ValueError("dimension d must be at least 1")


def terminal_draws(field: RandomField, keys: np.ndarray, t: np.ndarray, count: int) -> np.ndarray:
    """Brownian shifts ``W^{(theta,0,-k)}_{T-t}`` for ``k = 1..count``.

    Returns shape ``(len(keys), count, d)``.
    """
    batch = keys.shape[0]
    seconds = np.tile(-np.arange(1, count + 1), batch)
    ck = child_keys(np.repeat(keys, count), 0, seconds)
    times = np.repeat(field.horizon - t, count)
    return field.brownian_keys(ck, times).reshape(batch, count, field.dim)


@dataclass(frozen=True)
class LevelDraws:
    """Randomness of the ``count`` summands at one level of one node.

    Arrays are flattened item-major: entry ``b * count + (k - 1)``.
    """

    keys: np.ndarray
    prev_keys: np.ndarray
    times: np.ndarray
    shifts: np.ndarray


def level_draws(
    field: RandomField, keys: np.ndarray, t: np.ndarray, level: int, count: int
) -> LevelDraws:
    """Children ``(theta, level, k)`` and ``(theta, -level, k)`` for ``k = 1..count``.

    The time ``U = t + (T - t) u`` and the shift ``W_{U - t}`` both belong to
    the child ``(theta, level, k)``.
    """
    batch = keys.shape[0]
    parents = np.repeat(keys, count)
    seconds = np.tile(np.arange(1, count + 1), batch)
    ck = child_keys(parents, level, seconds)
    pk = child_keys(parents, -level, seconds)
    t_rep = np.repeat(t, count)
    times = field.time_keys(ck, t_rep)
    shifts = field.brownian_keys(ck, times - t_rep)
    return LevelDraws(ck, pk, times, shifts)


def _recurse(
    n: int,
    M: int,
    keys: np.ndarray,
    t: np.ndarray,
    x: np.ndarray,
    g: ScalarField,
    f: ScalarMap,
    field: RandomField,
) -> np.ndarray:
    """Estimates for ``B`` nodes at ``m`` points each.

    ``keys`` and ``t`` have shape ``(B,)`` and ``x`` has shape ``(B, m, d)``;
    the result has shape ``(B, m)``.  Draws are made once per node and shared
    by all of its points.
    """
    batch, m, d = x.shape
    if n == 0:
        return np.zeros((batch, m))
    count = M**n
    shifts = terminal_draws(field, keys, t, count)
    pts = (x[:, None, :, :] + shifts[:, :, None, :]).reshape(-1, d)
    vals = np.asarray(g(pts), dtype=np.float64).reshape(batch, count, m)
    total = vals.sum(axis=1) / count
    for i in range(n):
        count = M ** (n - i)
        draws = level_draws(field, keys, t, i, count)
        xc = np.repeat(x, count, axis=0) + draws.shifts[:, None, :]
        diff = np.asarray(f(_recurse(i, M, draws.keys, draws.times, xc, g, f, field)), dtype=np.float64)
        if i >= 1:
            prev = _recurse(i - 1, M, draws.prev_keys, draws.times, xc, g, f, field)
            diff = diff - np.asarray(f(prev), dtype=np.float64)
        weight = (field.horizon - t) / count
        total = total + weight[:, None] * diff.reshape(batch, count, m).sum(axis=1)
    return total


def mlp_estimate(
    params: MlpParams,
    x,
    g: ScalarField,
    f: ScalarMap,
    field: RandomField,
    theta: MultiIndex = MultiIndex(),
) -> float | np.ndarray:
    """Value of the level-``n`` estimator ``U_n^theta(t, x)``.

    Args:
        params: Level, branching, horizon, time and dimension.
        x: One point of shape ``(d,)`` or a batch ``(m, d)``; a batch reuses
            the same random draws for every point.
        g: Terminal condition, batched ``(N, d) -> (N,)``.
        f: Nonlinearity, applied elementwise to arrays of any shape.
        field: Source of all randomness; must match ``d`` and ``T``.
        theta: Root index of the estimator.

    Raises:
        MlpOverflowError: If any estimate exceeds ``1e15`` in magnitude or is
            not finite.
    """
    if field.dim != params.d or field.horizon != params.T:
        raise ValueError("random field dimension and horizon must match the parameters")
    pts = np.asarray(x, dtype=np.float64)
    single = pts.ndim == 1
    pts = pts.reshape(-1, params.d)
    keys = np.array([field.key(theta)], dtype=np.uint64)
    t = np.array([float(params.t)])
    with np.errstate(over="ignore", invalid="ignore"):
        out = _recurse(params.n, params.M, keys, t, pts[None], g, f, field)[0]
    if not np.all(np.isfinite(out)) or np.any(np.abs(out) > OVERFLOW_LIMIT):
        raise MlpOverflowError("MLP estimate overflowed the working range (|value| > 1e15)")
    return float(out[0]) if single else out
