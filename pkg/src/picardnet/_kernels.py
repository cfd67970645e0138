"""Compiled inner loops: network forward pass and counter-based random draws."""

from __future__ import annotations

import math

import numpy as np
from numba import njit

ACT_IDENTITY = 0
ACT_RELU = 1
ACT_LEAKY = 2
ACT_SOFTPLUS = 3


@njit(cache=True, inline="always")
def softplus_scalar(z: float) -> float:
    # Same value as z + log1p(exp(-z)) / log1p(exp(z)); the two outer branches
    # only skip work whose result is already determined in double precision.
    if z > 37.0:
        return z
    if z < -746.0:
        return 0.0
    if z > 0.0:
        return z + math.log1p(math.exp(-z))
    return math.log1p(math.exp(z))


@njit(cache=True, inline="always")
def _activate(z: float, kind: int, alpha: float) -> float:
    if kind == ACT_RELU:
        return z if z > 0.0 else 0.0
    if kind == ACT_LEAKY:
        az = alpha * z
        return z if z > az else az
    if kind == ACT_SOFTPLUS:
        return softplus_scalar(z)
    return z


@njit(cache=True)
def activate_array(z: np.ndarray, kind: int, alpha: float) -> np.ndarray:
    flat = z.ravel()
    out = np.empty_like(flat)
    for i in range(flat.size):
        out[i] = _activate(flat[i], kind, alpha)
    return out.reshape(z.shape)


@njit(cache=True)
def forward(
    x: np.ndarray,
    indptr: np.ndarray,
    indices: np.ndarray,
    data: np.ndarray,
    bias: np.ndarray,
    rows: np.ndarray,
    ptr_off: np.ndarray,
    nz_off: np.ndarray,
    bias_off: np.ndarray,
    activate: np.ndarray,
    kind: int,
    alpha: float,
    max_width: int,
) -> np.ndarray:
    """Evaluate a chain of CSR stages point by point.

    Stage ``s`` maps the current vector through a CSR matrix with ``rows[s]``
    rows, adds ``bias[bias_off[s]:]`` when ``bias_off[s] >= 0`` and applies the
    activation when ``activate[s]`` is nonzero.
    """
    n_points = x.shape[0]
    n_stages = rows.shape[0]
    out_dim = rows[n_stages - 1]
    out = np.empty((n_points, out_dim))
    cur = np.empty(max_width)
    nxt = np.empty(max_width)
    for p in range(n_points):
        for j in range(x.shape[1]):
            cur[j] = x[p, j]
        for s in range(n_stages):
            po = ptr_off[s]
            no = nz_off[s]
            bo = bias_off[s]
            act = activate[s]
            for r in range(rows[s]):
                acc = 0.0
                for idx in range(indptr[po + r], indptr[po + r + 1]):
                    acc += data[no + idx] * cur[indices[no + idx]]
                if bo >= 0:
                    acc += bias[bo + r]
                if act:
                    acc = _activate(acc, kind, alpha)
                nxt[r] = acc
            for r in range(rows[s]):
                cur[r] = nxt[r]
        for j in range(out_dim):
            out[p, j] = cur[j]
    return out


# ---------------------------------------------------------------------------
# Counter-based randomness
# ---------------------------------------------------------------------------

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


@njit(cache=True, inline="always")
def splitmix(z: np.uint64) -> np.uint64:
    z = z + _GOLDEN
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True, inline="always")
def mix2(key: np.uint64, value: np.uint64) -> np.uint64:
    return splitmix(key ^ splitmix(value))


@njit(cache=True, inline="always")
def unit_uniform(key: np.uint64) -> float:
    """A uniform draw in the open interval (0, 1)."""
    return (float(key >> _S11) + 0.5) * _INV53


@njit(cache=True, inline="always")
def standard_normal(key: np.uint64, level: int, node: int) -> float:
    k = mix2(mix2(key, np.uint64(level)), np.uint64(node))
    u1 = unit_uniform(mix2(k, np.uint64(1)))
    u2 = unit_uniform(mix2(k, np.uint64(2)))
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


@njit(cache=True)
def bridge_value(key: np.uint64, s: float, horizon: float, levels: int) -> float:
    """Value at time ``s`` of the Brownian path identified by ``key``.

    The endpoint is drawn first, then midpoints are filled in by Brownian
    bridge sampling along the dyadic interval containing ``s``; below the
    finest level the path is linear.
    """
    if s <= 0.0:
        return 0.0
    right_val = math.sqrt(horizon) * standard_normal(key, 0, 0)
    if s >= horizon:
        return right_val
    lo = 0.0
    hi = horizon
    lo_val = 0.0
    hi_val = right_val
    node = 0
    for level in range(1, levels + 1):
        mid = 0.5 * (lo + hi)
        mid_val = 0.5 * (lo_val + hi_val) + math.sqrt(0.25 * (hi - lo)) * standard_normal(
            key, level, node
        )
        if s < mid:
            hi = mid
            hi_val = mid_val
            node = 2 * node
        elif s > mid:
            lo = mid
            lo_val = mid_val
            node = 2 * node + 1
        else:
            return mid_val
    return lo_val + (hi_val - lo_val) * (s - lo) / (hi - lo)


@njit(cache=True)
def brownian_batch(
    keys: np.ndarray, times: np.ndarray, dim: int, horizon: float, levels: int
) -> np.ndarray:
    """Brownian values for query ``i`` at ``times[i]`` on path ``keys[i]``.

    Coordinate ``c`` of path ``key`` is the scalar path keyed by ``mix2(key, c)``.
    """
    out = np.empty((keys.shape[0], dim))
    for i in range(keys.shape[0]):
        for c in range(dim):
            out[i, c] = bridge_value(mix2(keys[i], np.uint64(c)), times[i], horizon, levels)
    return out


@njit(cache=True)
def uniform_batch(keys: np.ndarray) -> np.ndarray:
    out = np.empty(keys.shape[0])
    for i in range(keys.shape[0]):
        out[i] = unit_uniform(splitmix(keys[i]))
    return out


@njit(cache=True)
def mix_batch(keys: np.ndarray, values: np.ndarray) -> np.ndarray:
    out = np.empty(keys.shape[0], dtype=np.uint64)
    for i in range(keys.shape[0]):
        out[i] = mix2(keys[i], values[i])
    return out
