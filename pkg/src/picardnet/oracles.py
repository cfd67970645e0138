"""Reference solutions for the terminal-value problem ``du/dt + (1/2) Laplace(u) + f(u) = 0``."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.linalg import solve_banded

from .problems import ProblemSpec

__all__ = [
    "FdGrid",
    "GridError",
    "gauss_bump_heat",
    "heat_expectation",
    "oracle_fd_1d",
    "oracle_linear",
]


class GridError(RuntimeError):
    """The finite-difference scheme became unstable or the grid is inadmissible."""


def gauss_bump_heat(a: float, x: np.ndarray, s: float | np.ndarray) -> np.ndarray:
    """Closed form of ``E[exp(-a |x + W_s|^2)]`` for standard Brownian ``W``."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    s = np.asarray(s, dtype=np.float64)
    d = x.shape[1]
    denom = 1.0 + 2.0 * a * s
    return denom ** (-d / 2.0) * np.exp(-a * np.sum(x * x, axis=1) / denom)


def heat_expectation(
    g: Callable[[np.ndarray], np.ndarray],
    x: np.ndarray,
    s: np.ndarray,
    nodes: int = 64,
    mc_samples: int = 1_000_000,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """``E[g(x + W_s)]`` at each row of ``x`` with its own ``s``.

    Tensor Gauss-Hermite quadrature with ``nodes`` points per axis when
    ``d <= 3``; otherwise plain Monte Carlo with ``mc_samples`` draws shared by
    all points.  Returns the values and their standard errors (zero for
    quadrature).
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    s = np.broadcast_to(np.asarray(s, dtype=np.float64), (x.shape[0],))
    d = x.shape[1]
    out = np.empty(x.shape[0])
    err = np.zeros(x.shape[0])
    if d <= 3:
        z, w = np.polynomial.hermite_e.hermegauss(nodes)
        w = w / math.sqrt(2.0 * math.pi)
        grid = np.array(list(itertools.product(z, repeat=d)))
        weights = np.prod(np.array(list(itertools.product(w, repeat=d))), axis=1)
        for i in range(x.shape[0]):
            out[i] = weights @ g(x[i] + math.sqrt(s[i]) * grid)
        return out, err
    rng = np.random.default_rng(seed)
    normals = rng.standard_normal((mc_samples, d))
    for i in range(x.shape[0]):
        vals = g(x[i] + math.sqrt(s[i]) * normals)
        out[i] = vals.mean()
        err[i] = vals.std(ddof=1) / math.sqrt(mc_samples)
    return out, err


def oracle_linear(spec: ProblemSpec, t, x, nodes: int = 64, method: str = "auto") -> np.ndarray:
    """Solution for ``f(u) = c u``: ``exp(c (T - t)) E[g(x + W_{T-t})]``.

    ``t`` is a scalar or one time per row of ``x``.  ``method="auto"`` uses
    :func:`heat_expectation` (quadrature for ``d <= 3``, Monte Carlo beyond);
    ``method="closed"`` uses :func:`gauss_bump_heat` and needs Gaussian data.
    """
    if spec.f.kind not in ("linear", "zero"):
        raise ValueError("oracle_linear needs a linear or zero nonlinearity")
    c = spec.f.c if spec.f.kind == "linear" else 0.0
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    t = np.broadcast_to(np.asarray(t, dtype=np.float64), (x.shape[0],))
    if np.any(t < 0) or np.any(t > spec.T):
        raise ValueError(f"t must lie in [0, {spec.T}]")
    s = spec.T - t
    if method == "closed":
        if spec.g.kind != "gauss":
            raise ValueError("the closed form needs Gaussian bump data")
        values = gauss_bump_heat(spec.g.a, x, s)
    elif method == "auto":
        values, _ = heat_expectation(spec.g, x, s, nodes=nodes)
    else:
        raise ValueError(f"unknown oracle method {method!r}")
    return np.exp(c * s) * values


@dataclass(frozen=True)
class FdGrid:
    """Space step ``h``, time step ``tau`` and half-width ``radius`` of the domain."""

    h: float = 0.01
    tau: float = 0.005
    radius: float = 8.0

    def __post_init__(self) -> None:
        if not (self.h > 0 and self.tau > 0 and self.radius > 0):
            raise GridError("grid steps and radius must be positive")
        if self.tau > self.h:
            raise GridError(f"time step {self.tau} exceeds space step {self.h}")


def oracle_fd_1d(
    spec: ProblemSpec,
    grid: FdGrid = FdGrid(),
    picard_tol: float = 1e-13,
    picard_max: int = 50,
) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """Crank-Nicolson reference solution for ``d = 1``.

    Works in time-to-go ``s = T - t`` where ``v_s = (1/2) v_xx + f(v)``.  The
    nonlinearity is treated with the trapezoidal rule and resolved by
    fixed-point iteration in each step.  Boundary values follow the ODE
    ``v' = f(v)`` (data is assumed to be negligible in curvature there).

    Returns:
        A callable ``u(t, x)`` interpolating the stored solution bilinearly.

    Raises:
        GridError: If the solution becomes non-finite or blows up.
    """
    if spec.d != 1:
        raise GridError("the finite-difference oracle is one-dimensional")
    steps = max(1, math.ceil(spec.T / grid.tau - 1e-9))
    tau = spec.T / steps
    n_pts = int(round(2.0 * grid.radius / grid.h)) + 1
    xs = np.linspace(-grid.radius, grid.radius, n_pts)
    h = xs[1] - xs[0]
    f = spec.f
    v = spec.g(xs.reshape(-1, 1)).astype(np.float64)
    inner = n_pts - 2
    r = 0.5 * tau / (2.0 * h * h)
    ab = np.zeros((3, inner))
    ab[0, 1:] = -r
    ab[1, :] = 1.0 + 2.0 * r
    ab[2, :-1] = -r
    history = np.empty((steps + 1, n_pts))
    history[0] = v
    scale = max(1.0, float(np.max(np.abs(v))))
    for step in range(steps):
        fv = f(v)
        explicit = v[1:-1] + r * (v[:-2] - 2.0 * v[1:-1] + v[2:]) + 0.5 * tau * fv[1:-1]
        new = v.copy()
        for _ in range(picard_max):
            fb = f(new[[0, -1]])
            edges = v[[0, -1]] + 0.5 * tau * (fv[[0, -1]] + fb)
            rhs = explicit + 0.5 * tau * f(new[1:-1])
            rhs[0] += r * edges[0]
            rhs[-1] += r * edges[1]
            interior = solve_banded((1, 1), ab, rhs)
            candidate = np.concatenate([[edges[0]], interior, [edges[1]]])
            change = float(np.max(np.abs(candidate - new)))
            new = candidate
            if change <= picard_tol * scale:
                break
        v = new
        if not np.all(np.isfinite(v)) or np.max(np.abs(v)) > 1e10 * scale:
            raise GridError(f"finite-difference solution blew up at step {step + 1}")
        history[step + 1] = v
    s_grid = np.linspace(0.0, spec.T, steps + 1)
    interp = RegularGridInterpolator((s_grid, xs), history, method="linear")

    def u(t, x) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        t = np.broadcast_to(t, x.shape)
        if np.any(np.abs(x) > grid.radius):
            raise GridError("query outside the finite-difference domain")
        return interp(np.stack([spec.T - t, x], axis=1))

    return u
