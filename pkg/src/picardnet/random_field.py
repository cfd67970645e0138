"""Indexed randomness for the multilevel Picard recursion.

Every random quantity is a pure function of ``(master_seed, index path,
query)``: an index path is folded into a 64-bit key by repeated hashing and
the key drives a counter-based generator.  Nothing is stored, so the
exponentially large index tree never has to be materialized and results do
not depend on evaluation order.

Brownian paths are defined through a fixed dyadic refinement: the endpoint
``W_T`` is drawn first, and the value at any time is obtained by descending
the dyadic bisection of ``[0, T]`` and drawing every midpoint from its
Brownian-bridge law.  Each midpoint draw depends only on its position in the
bisection tree, so any set of query times sees one consistent path.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels

__all__ = ["BRIDGE_LEVELS", "MultiIndex", "RandomField", "child_keys"]

BRIDGE_LEVELS = 40
_TAG_ROOT = np.uint64(0x6A09E667F3BCC908)
_TAG_BROWNIAN = np.uint64(0x3C6EF372FE94F82B)
_TAG_UNIFORM = np.uint64(0xA54FF53A5F1D36F1)


def _encode(value: int) -> np.uint64:
    return np.array([value], dtype=np.int64).view(np.uint64)[0]


@dataclass(frozen=True)
class MultiIndex:
    """A nonempty tuple of integers labelling one independent random family."""

    path: tuple[int, ...] = (0,)

    def __post_init__(self) -> None:
        if not self.path:
            raise ValueError("a multi-index must be nonempty")

    def child(self, *entries: int) -> MultiIndex:
        return MultiIndex(self.path + tuple(int(e) for e in entries))

    def __str__(self) -> str:
        return "(" + ",".join(str(p) for p in self.path) + ")"


def child_keys(parent: np.ndarray | np.uint64, first: int, seconds: np.ndarray) -> np.ndarray:
    """Keys of the children ``(theta, first, s)`` for every ``s`` in ``seconds``.

    ``parent`` is either one key or an array of keys with the same length as
    ``seconds``.
    """
    seconds = np.asarray(seconds, dtype=np.int64).view(np.uint64)
    parents = np.broadcast_to(np.asarray(parent, dtype=np.uint64), seconds.shape)
    mid = _kernels.mix_batch(np.ascontiguousarray(parents), np.full(seconds.shape, _encode(first)))
    return _kernels.mix_batch(mid, np.ascontiguousarray(seconds))


@dataclass(frozen=True)
class RandomField:
    """Brownian motions and uniforms indexed by multi-indices.

    Args:
        seed: Master seed (any integer representable in 64 bits).
        dim: Spatial dimension of every Brownian motion.
        horizon: Time horizon ``T``; Brownian paths live on ``[0, T]``.
    """

    seed: int
    dim: int
    horizon: float

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError("dimension must be at least 1")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")

    @property
    def root_key(self) -> np.uint64:
        return np.uint64(_kernels.splitmix(np.uint64(self.seed & 0xFFFFFFFFFFFFFFFF) ^ _TAG_ROOT))

    def key(self, theta: MultiIndex) -> np.uint64:
        k = self.root_key
        for entry in theta.path:
            k = np.uint64(_kernels.mix2(k, _encode(entry)))
        return k

    def child_key(self, key: np.uint64, first: int, second: int) -> np.uint64:
        return np.uint64(_kernels.mix2(np.uint64(_kernels.mix2(key, _encode(first))), _encode(second)))

    # -- Brownian motion ------------------------------------------------

    def _check_times(self, times: np.ndarray) -> None:
        if np.any(times < 0.0) or np.any(times > self.horizon) or np.any(~np.isfinite(times)):
            raise ValueError(f"Brownian query times must lie in [0, {self.horizon}]")

    def brownian_keys(self, keys: np.ndarray, times: np.ndarray) -> np.ndarray:
        """``W^{key[i]}`` at ``times[i]`` for every ``i``; shape ``(len(keys), dim)``."""
        keys = np.ascontiguousarray(np.asarray(keys, dtype=np.uint64))
        times = np.ascontiguousarray(np.broadcast_to(np.asarray(times, dtype=np.float64), keys.shape))
        self._check_times(times)
        bkeys = _kernels.mix_batch(keys, np.full(keys.shape, _TAG_BROWNIAN))
        return _kernels.brownian_batch(bkeys, times, self.dim, self.horizon, BRIDGE_LEVELS)

    def brownian_at(self, theta: MultiIndex, times: Sequence[float]) -> np.ndarray:
        """Values of ``W^theta`` at the given times; shape ``(len(times), dim)``."""
        times = np.asarray(times, dtype=np.float64).reshape(-1)
        if np.any(np.diff(times) < 0):
            raise ValueError("query times must be increasing")
        keys = np.full(times.shape, self.key(theta), dtype=np.uint64)
        return self.brownian_keys(keys, times)

    # -- Uniform times --------------------------------------------------

    def uniform_keys(self, keys: np.ndarray) -> np.ndarray:
        keys = np.ascontiguousarray(np.asarray(keys, dtype=np.uint64))
        return _kernels.uniform_batch(_kernels.mix_batch(keys, np.full(keys.shape, _TAG_UNIFORM)))

    def time_keys(self, keys: np.ndarray, t: np.ndarray | float) -> np.ndarray:
        """``t + (T - t) * u^key`` for every key."""
        t = np.asarray(t, dtype=np.float64)
        if np.any(t < 0.0) or np.any(t > self.horizon):
            raise ValueError(f"t must lie in [0, {self.horizon}]")
        return t + (self.horizon - t) * self.uniform_keys(keys)

    def time_sample(self, theta: MultiIndex, t: float) -> float:
        """A uniform time in ``[t, T]`` attached to ``theta``."""
        keys = np.array([self.key(theta)], dtype=np.uint64)
        return float(self.time_keys(keys, float(t))[0])
