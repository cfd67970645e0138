"""Problem descriptions: nonlinearities, terminal data and their network forms."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .calculus import affine, compose, identity_net, parallel_same, scale, summation_net
from .gadgets import InterpSpec, interp_eval, pwl_net
from .network import Activation, Network, network_function, scalar_map

__all__ = [
    "Nonlinearity",
    "ProblemSpec",
    "TerminalData",
    "gauss_bump_net",
]


@dataclass(frozen=True)
class Nonlinearity:
    """The map ``f`` in ``du/dt + (1/2) Laplace(u) + f(u) = 0``.

    Kinds: ``zero``; ``linear`` (``f(u) = c u``); ``sin`` (``f(u) = c sin(u)``);
    ``table`` (piecewise-linear through ``knots``/``values``, constant outside);
    ``network`` (realization of a stored network with one input).
    """

    kind: str
    c: float = 1.0
    knots: tuple[float, ...] = ()
    values: tuple[float, ...] = ()
    net: Network | None = field(default=None, compare=False)
    act: Activation | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("zero", "linear", "sin", "table", "network"):
            raise ValueError(f"unknown nonlinearity {self.kind!r}")
        if self.kind == "table":
            InterpSpec.make(self.knots, self.values)
        if self.kind == "network":
            if self.net is None or self.act is None:
                raise ValueError("a network nonlinearity needs a network and an activation")
            if self.net.input_dim != 1 or self.net.output_dim != 1:
                raise ValueError("a nonlinearity network must map R to R")

    @classmethod
    def parse(cls, text: str) -> Nonlinearity:
        """Parse ``zero``, ``linear:c``, ``sin`` or ``sin:c``."""
        name, _, arg = text.partition(":")
        if name == "zero":
            return cls("zero", 0.0)
        if name in ("linear", "sin"):
            return cls(name, float(arg) if arg else 1.0)
        raise ValueError(f"cannot parse nonlinearity {text!r}")

    @property
    def lipschitz(self) -> float:
        if self.kind == "zero":
            return 0.0
        if self.kind in ("linear", "sin"):
            return abs(self.c)
        if self.kind == "table":
            return InterpSpec.make(self.knots, self.values).lipschitz
        raise ValueError("the Lipschitz constant of a network nonlinearity is not tracked")

    def __call__(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=np.float64)
        if self.kind == "zero":
            return np.zeros_like(u)
        if self.kind == "linear":
            return self.c * u
        if self.kind == "sin":
            return self.c * np.sin(u)
        if self.kind == "table":
            return np.asarray(interp_eval(InterpSpec.make(self.knots, self.values), u))
        return scalar_map(self.net, self.act)(u)

    def network(self, act: Activation) -> Network:
        """Exact network form of ``f`` (zero, linear and table kinds)."""
        if self.kind == "zero":
            return affine([[0.0]])
        if self.kind == "linear":
            return scale(self.c, identity_net(act).net)
        if self.kind == "table":
            if act.kind == "softplus":
                raise ValueError("table nonlinearities are exact only for relu-type activations")
            return pwl_net(InterpSpec.make(self.knots, self.values), act)
        if self.kind == "network":
            if act != self.act:
                raise ValueError("activation does not match the stored nonlinearity network")
            return self.net
        raise ValueError(f"no exact network form for the {self.kind!r} nonlinearity")


def _uniform_spec(fn: Callable[[np.ndarray], np.ndarray], lo: float, hi: float, pieces: int) -> InterpSpec:
    knots = np.linspace(lo, hi, pieces + 1)
    return InterpSpec.make(knots, fn(knots))


def gauss_bump_net(d: int, a: float, act: Activation, tol: float = 1e-3) -> Network:
    """Network for ``x -> exp(-a |x|^2)`` within ``tol`` in sup norm.

    Coordinates are squared by interpolants on ``[-R, R]`` with
    ``exp(-a R^2) <= tol / 4``, summed, and fed to an interpolant of
    ``s -> exp(-a s)`` on ``[0, R^2]``.  The same layout is used for every
    ``d`` (including ``d = 1``) so that sizes across dimensions are
    comparable; knot counts depend on ``d`` only through the accuracy of the
    coordinate squares.
    """
    if d < 1 or a <= 0 or tol <= 0:
        raise ValueError("need d >= 1, a > 0 and tol > 0")
    radius = math.sqrt(math.log(4.0 / tol) / a)
    smooth_tol = 0.25 * tol if act.kind == "softplus" else 0.0
    # Outer map exp(-a s) has |f''| <= a^2; inner squares have error h^2 / 4 each.
    top = radius * radius
    outer_pieces = math.ceil(top / math.sqrt(tol / a**2))
    outer = pwl_net(_uniform_spec(lambda s: np.exp(-a * s), 0.0, top, outer_pieces), act, tol=smooth_tol)
    inner_pieces = math.ceil(2.0 * radius / math.sqrt(tol / (a * d)))
    square = pwl_net(_uniform_spec(lambda x: x * x, -radius, radius, inner_pieces), act, tol=smooth_tol / d)
    squares = parallel_same([square] * d)
    return compose(outer, compose(summation_net(1, d), squares))


@dataclass(frozen=True)
class TerminalData:
    """Terminal condition ``g``: a Gaussian bump ``exp(-a |x|^2)`` or a network."""

    kind: str = "gauss"
    a: float = 1.0
    net: Network | None = field(default=None, compare=False)
    act: Activation | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("gauss", "network"):
            raise ValueError(f"unknown terminal data {self.kind!r}")
        if self.kind == "gauss" and self.a <= 0:
            raise ValueError("bump width parameter must be positive")
        if self.kind == "network" and (self.net is None or self.act is None):
            raise ValueError("network terminal data needs a network and an activation")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "gauss":
            return np.exp(-self.a * np.sum(x * x, axis=-1))
        return network_function(self.net, self.act)(x)

    def network(self, d: int, act: Activation, tol: float = 1e-3) -> Network:
        if self.kind == "gauss":
            return gauss_bump_net(d, self.a, act, tol)
        if act != self.act or self.net.input_dim != d:
            raise ValueError("stored terminal network does not match the activation or dimension")
        return self.net


@dataclass(frozen=True)
class ProblemSpec:
    """A semilinear heat problem together with the constants used by schedules.

    Args:
        d: Spatial dimension.
        T: Time horizon.
        f: Nonlinearity.
        g: Terminal data.
        diffusion: Diffusion coefficient of the initial-value form
            ``du/dt = diffusion * Laplace(u) + f(u)``; ``0.5`` matches the
            terminal-value form directly.
        L: Lipschitz constant of ``f`` (defaults to the exact value).
        kappa: Growth and moment constant (defaults to the smallest value
            compatible with the uniform evaluation measure, see
            :meth:`default_kappa`).
        p, q, qnorm, r: Growth exponent, product-gadget exponent, error norm
            exponent and moment exponent.
    """

    d: int
    T: float = 1.0
    f: Nonlinearity = Nonlinearity("linear", 1.0)
    g: TerminalData = TerminalData()
    diffusion: float = 0.5
    L: float | None = None
    kappa: float | None = None
    p: float = 2.0
    q: float = 3.0
    qnorm: float = 2.0
    r: float = 0.5

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ValueError("d must be at least 1")
        if not self.T > 0:
            raise ValueError("T must be positive")
        if not self.diffusion > 0:
            raise ValueError("diffusion must be positive")
        if self.q <= 2:
            raise ValueError("q must exceed 2")
        if self.qnorm < 2 or self.p < 1 or self.r < 0.5:
            raise ValueError("need qnorm >= 2, p >= 1 and r >= 1/2")
        if self.L is not None and self.f.kind != "network" and self.L < self.f.lipschitz:
            raise ValueError(f"L = {self.L} is below the Lipschitz constant {self.f.lipschitz} of f")

    @property
    def lipschitz(self) -> float:
        if self.L is not None:
            return self.L
        return self.f.lipschitz

    @property
    def moment_order(self) -> float:
        """The exponent ``p^2 q qnorm`` appearing in the moment hypothesis."""
        return self.p**2 * self.q * self.qnorm

    def default_kappa(self) -> float:
        """Smallest convenient constant for the evaluation measure.

        The measure is Lebesgue measure on ``[0, T] x [0, 1]^d``.  Points there
        satisfy ``|y|^2 <= T^2 + d <= (1 + T^2) d``, so the moment integral is at
        most ``T (1 + (1 + T^2)^(m/2) d^(m/2))`` with ``m = p^2 q qnorm``, which
        is below ``kappa d^(r m)`` for ``r >= 1/2`` and this ``kappa``.
        """
        m = self.moment_order
        moment = self.T * (1.0 + (1.0 + self.T**2) ** (m / 2))
        return max(1.0, abs(float(self.f(np.array(0.0)))), 2.0, moment)

    @property
    def kappa_value(self) -> float:
        return self.kappa if self.kappa is not None else self.default_kappa()

    def moment_hypothesis_holds(self) -> bool:
        m = self.moment_order
        bound = self.T * (1.0 + (1.0 + self.T**2) ** (m / 2) * self.d ** (m / 2))
        return bound <= self.kappa_value * self.d ** (self.r * m)
