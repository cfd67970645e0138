"""Closed-form gadget networks: hats, piecewise-linear maps, squares and products."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .calculus import activation_net, affine, compose, parallel_same, scale, sum_same
from .network import Activation, Layer, Network

__all__ = [
    "GadgetBudget",
    "HatSpec",
    "InterpSpec",
    "base_square_constants",
    "base_square_net",
    "hat_decompose",
    "hat_exact_leaky",
    "hat_network",
    "hat_sum_eval",
    "interp_eval",
    "product_net",
    "product_param_bound",
    "product_param_bound_from_square",
    "pwl_net",
    "pwl_softplus_approx",
    "ramp_sum_net",
    "softplus_hat_param_bound",
    "square_net",
    "square_param_bound",
]


# ---------------------------------------------------------------------------
# Piecewise-linear interpolation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InterpSpec:
    """Knots ``t_0 < ... < t_K`` with values ``f_0, ..., f_K``."""

    knots: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.knots) != len(self.values):
            raise ValueError("knots and values must have the same length")
        if len(self.knots) < 1:
            raise ValueError("at least one knot is required")
        if np.any(np.diff(self.knots) <= 0):
            raise ValueError("knots must be strictly increasing")

    @classmethod
    def make(cls, knots: Sequence[float], values: Sequence[float]) -> InterpSpec:
        return cls(tuple(float(t) for t in knots), tuple(float(v) for v in values))

    @property
    def lipschitz(self) -> float:
        if len(self.knots) < 2:
            return 0.0
        return float(np.max(np.abs(np.diff(self.values) / np.diff(self.knots))))


def interp_eval(spec: InterpSpec, t) -> np.ndarray | float:
    """Piecewise-linear interpolant, constant outside ``[t_0, t_K]``.

    Inside an interval the value is ``f_{k-1} + (t - t_{k-1}) / (t_k - t_{k-1})
    * (f_k - f_{k-1})``; at a knot the stored value is returned exactly.
    """
    knots = np.asarray(spec.knots)
    values = np.asarray(spec.values)
    arr = np.asarray(t, dtype=np.float64)
    if knots.size == 1:
        out = np.full(arr.shape, values[0])
        return float(out) if out.ndim == 0 else out
    k = np.clip(np.searchsorted(knots, arr, side="right"), 1, knots.size - 1)
    t0, t1 = knots[k - 1], knots[k]
    f0, f1 = values[k - 1], values[k]
    inner = f0 + ((arr - t0) / (t1 - t0)) * (f1 - f0)
    out = np.where(arr <= knots[0], values[0], np.where(arr >= knots[-1], values[-1], inner))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class HatSpec:
    """Hat function with support ``[t0, t2]`` and peak 1 at ``t1``."""

    t0: float
    t1: float
    t2: float

    def __post_init__(self) -> None:
        if not (self.t0 < self.t1 < self.t2):
            raise ValueError(f"hat knots must be strictly increasing, got {self.knots}")

    @property
    def knots(self) -> tuple[float, float, float]:
        return (self.t0, self.t1, self.t2)

    @property
    def coefficients(self) -> tuple[float, float, float]:
        """Slope changes at the three knots."""
        left = 1.0 / (self.t1 - self.t0)
        right = 1.0 / (self.t2 - self.t1)
        return (left, -right - left, right)

    @property
    def lipschitz(self) -> float:
        return max(1.0 / (self.t1 - self.t0), 1.0 / (self.t2 - self.t1))

    def as_interp(self) -> InterpSpec:
        return InterpSpec(self.knots, (0.0, 1.0, 0.0))

    def __call__(self, t) -> np.ndarray | float:
        return interp_eval(self.as_interp(), t)


def hat_decompose(spec: InterpSpec, horizon: float) -> list[tuple[float, HatSpec]]:
    """Write the interpolant on ``[0, horizon]`` as a weighted sum of hats.

    The first and last hats get ghost knots one spacing outside the interval.
    """
    knots = spec.knots
    if len(knots) < 2:
        raise ValueError("hat decomposition needs at least two knots")
    if knots[0] != 0.0 or knots[-1] != horizon:
        raise ValueError(f"knots must run from 0 to {horizon}, got {knots[0]}..{knots[-1]}")
    ext = (2 * knots[0] - knots[1],) + knots + (2 * knots[-1] - knots[-2],)
    return [
        (spec.values[k], HatSpec(ext[k], ext[k + 1], ext[k + 2])) for k in range(len(knots))
    ]


def hat_sum_eval(terms: Sequence[tuple[float, HatSpec]], t) -> np.ndarray | float:
    arr = np.asarray(t, dtype=np.float64)
    total = np.zeros(arr.shape)
    for coef, hat in terms:
        total = total + coef * hat(arr)
    return float(total) if total.ndim == 0 else total


# ---------------------------------------------------------------------------
# Hats
# ---------------------------------------------------------------------------


def hat_exact_leaky(spec: HatSpec, alpha: float) -> Network:
    """Six-unit network whose leaky-relu realization is exactly the hat.

    Each ramp ``c_j * relu(t - t_j)`` is rewritten through two leaky units
    (see :func:`picardnet.calculus.relu_from_leaky`) and the six pieces are
    added with :func:`~picardnet.calculus.sum_same`.  ``alpha = 0`` gives the
    plain relu construction with the same shape.
    """
    if alpha in (-1.0, 1.0):
        raise ValueError("leaky slope must not be +-1")
    sign = abs(1.0 - alpha) / (1.0 - alpha)
    pref = abs(1.0 - alpha) / ((1.0 - alpha) * (1.0 - alpha**2))
    unit = activation_net(1)
    pieces = []
    for c, t in zip(spec.coefficients, spec.knots):
        pieces.append(scale(pref * alpha * c, compose(unit, affine([[-sign]], [sign * t]))))
    for c, t in zip(spec.coefficients, spec.knots):
        pieces.append(scale(pref * c, compose(unit, affine([[sign]], [-sign * t]))))
    return sum_same(pieces)


def softplus_hat_param_bound(lipschitz: float, eps: float, q: float) -> float:
    e = q / (q - 1.0)
    return 12.0 * max(1.0, 4.0 * lipschitz) ** e * 2.0**e * eps ** (-e)


def hat_network(spec: HatSpec, act: Activation, eps: float, q: float = 2.0) -> Network:
    """Hat network for any supported activation (exact unless softplus)."""
    if act.kind in ("relu", "leaky_relu"):
        return hat_exact_leaky(spec, act.slope)
    if act.kind == "softplus":
        return pwl_softplus_approx(spec.as_interp(), eps, q)
    raise ValueError(f"no hat network for activation {act.kind!r}")


# ---------------------------------------------------------------------------
# Sums of ramps
# ---------------------------------------------------------------------------

_LN2 = math.log(2.0)


def ramp_sum_net(
    shifts: Sequence[float],
    coefs: Sequence[float],
    const: float,
    act: Activation,
    tol: float = 0.0,
) -> Network:
    """One-hidden-layer network for ``const + sum_j coefs[j] * relu(t - shifts[j])``.

    relu: exact, one unit per ramp.
    leaky relu: exact; ``relu(z) = (leaky(z) - alpha z) / (1 - alpha)`` per unit
    and the collected linear part is carried by one two-unit identity pair.
    softplus: each ramp becomes ``softplus(s z) / s`` with ``s`` chosen so that
    the total uniform deviation is at most ``tol``.
    """
    shifts = np.asarray(shifts, dtype=np.float64)
    coefs = np.asarray(coefs, dtype=np.float64)
    n = shifts.size
    if act.kind == "relu":
        w1, b1 = np.ones((n, 1)), -shifts
        w2, b2 = coefs.reshape(1, -1), np.array([const])
    elif act.kind == "leaky_relu":
        a = act.alpha
        lin = -a / (1.0 - a) * coefs.sum()
        off = a / (1.0 - a) * float(coefs @ shifts)
        w1 = np.concatenate([np.ones(n), [1.0, -1.0]]).reshape(-1, 1)
        b1 = np.concatenate([-shifts, [0.0, 0.0]])
        w2 = np.concatenate([coefs / (1.0 - a), [lin / (1.0 + a), -lin / (1.0 + a)]]).reshape(1, -1)
        b2 = np.array([const + off])
    elif act.kind == "softplus":
        if tol <= 0.0:
            raise ValueError("softplus ramps need a positive tolerance")
        s = max(1.0, float(np.abs(coefs).sum()) * _LN2 / tol)
        w1, b1 = np.full((n, 1), s), -s * shifts
        w2, b2 = (coefs / s).reshape(1, -1), np.array([const])
    else:
        raise ValueError(f"no ramp network for activation {act.kind!r}")
    return Network([Layer.make(w1, b1), Layer.make(w2, b2)])


def _ramp_form(spec: InterpSpec) -> tuple[np.ndarray, np.ndarray, float]:
    knots = np.asarray(spec.knots)
    values = np.asarray(spec.values)
    if knots.size == 1:
        return knots, np.zeros(1), float(values[0])
    slopes = np.diff(values) / np.diff(knots)
    coefs = np.diff(np.concatenate([[0.0], slopes, [0.0]]))
    return knots, coefs, float(values[0])


def pwl_net(spec: InterpSpec, act: Activation, tol: float = 0.0) -> Network:
    """Network for the interpolant of ``spec`` (exact for relu and leaky relu)."""
    knots, coefs, const = _ramp_form(spec)
    return ramp_sum_net(knots, coefs, const, act, tol)


def pwl_softplus_approx(spec: InterpSpec, eps: float, q: float = 2.0) -> Network:
    """Softplus network within ``eps * max(1, |t|^q)`` of the interpolant everywhere.

    The bound actually achieved is the uniform bound ``eps``.
    """
    if not 0.0 < eps <= 1.0:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    if q <= 1.0:
        raise ValueError("q must exceed 1")
    return pwl_net(spec, Activation("softplus"), tol=eps)


# ---------------------------------------------------------------------------
# Squares and products
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GadgetBudget:
    """Accuracy ``epsilon`` and growth exponent ``q`` for a square gadget."""

    epsilon: float
    q: float

    def __post_init__(self) -> None:
        if not 0.0 < self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if self.q <= 2.0:
            raise ValueError(f"q must exceed 2, got {self.q}")

    @property
    def delta(self) -> float:
        """Accuracy demanded of the base approximator."""
        q = self.q
        return 0.5 * 4.0 ** (-2.0 / (q - 2.0)) * self.epsilon ** (q / (q - 2.0))

    @property
    def input_scale(self) -> float:
        return (self.epsilon / 4.0) ** (1.0 / (self.q - 2.0))


def base_square_net(delta: float, act: Activation) -> Network:
    """Approximate ``x^2`` on ``[0, 1]`` extended by ``max(x, 0)`` outside.

    Uniform interpolation with ``N`` pieces has error ``1 / (4 N^2)``; relu and
    leaky networks are exact off ``[0, 1]``.  For softplus half of ``delta``
    goes to interpolation and half to the smoothing of the ramps.
    """
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    interp_budget = delta if act.kind in ("relu", "leaky_relu") else 0.5 * delta
    pieces = max(1, math.ceil(0.5 / math.sqrt(interp_budget)))
    knots = np.arange(pieces + 1) / pieces
    h = 1.0 / pieces
    slopes = (2.0 * np.arange(pieces) + 1.0) * h
    coefs = np.diff(np.concatenate([[0.0], slopes, [1.0]]))
    return ramp_sum_net(knots, coefs, 0.0, act, tol=0.5 * delta)


def base_square_constants(delta: float, q: float, act: Activation) -> dict:
    """Measured size constants of the base approximator.

    Returns ``r = q / (q - 1)`` and the smallest ``c >= 1`` with
    ``P(G) <= c * delta^(-r)``, together with the reference bound
    ``24 * 4^r * delta^(-r)`` (relu and leaky) or
    ``12 * 4^r * 2^r * (delta/2)^(-r)`` (softplus).
    """
    net = base_square_net(delta, act)
    r = q / (q - 1.0)
    c = max(1.0, net.param_count * delta**r)
    if act.kind == "softplus":
        reference = 12.0 * 4.0**r * 2.0**r * (0.5 * delta) ** (-r)
    else:
        reference = 24.0 * 4.0**r * delta ** (-r)
    return {"params": net.param_count, "r": r, "c": c, "reference_bound": reference}


def square_net(budget: GadgetBudget, act: Activation) -> Network:
    """Network within ``epsilon * max(1, |x|^q)`` of ``x^2`` on the whole line."""
    lam = budget.input_scale
    g = base_square_net(budget.delta, act)
    inner = compose(parallel_same([g, g]), affine([[lam], [-lam]]))
    return compose(affine([[lam**-2, lam**-2]]), inner)


def square_param_bound(budget: GadgetBudget, c: float, r: float) -> float:
    q, eps = budget.q, budget.epsilon
    return 2.0 ** (r + 2) * 4.0 ** (2 * r / (q - 2)) * c * eps ** (-r * q / (q - 2))


def product_net(budget: GadgetBudget, act: Activation) -> Network:
    """Network within ``epsilon * max(1, |v|^q, |w|^q)`` of ``v * w``.

    Uses ``v w = ((v + w)^2 - v^2 - w^2) / 2`` with three square networks of
    accuracy ``epsilon / (2^(q-1) + 1)``.
    """
    if act.kind not in ("relu", "leaky_relu", "softplus"):
        raise ValueError(f"no product network for activation {act.kind!r}")
    q = budget.q
    phi = square_net(GadgetBudget(budget.epsilon / (2.0 ** (q - 1) + 1.0), q), act)
    inner = compose(parallel_same([phi, phi, phi]), affine([[1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]))
    return compose(affine([[0.5, -0.5, -0.5]]), inner)


def product_param_bound_from_square(budget: GadgetBudget, c: float, r: float) -> float:
    q, eps = budget.q, budget.epsilon
    return 9.0 * c * (2.0 ** (q - 1) + 1.0) ** r * eps ** (-r)


def product_param_bound(budget: GadgetBudget, act: Activation) -> float:
    """Closed-form size bound: prefactor 864 (relu, leaky) or 1728 (softplus)."""
    q, eps = budget.q, budget.epsilon
    pref = 1728.0 if act.kind == "softplus" else 864.0
    expo = (q**3 + 3 * q**2 - 2 * q) / ((q - 2) * (q - 1))
    return pref * 2.0**expo * eps ** (-(q**2) / ((q - 2) * (q - 1)))
