"""Resolution schedules: level, grid size and gadget accuracies for a target error."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np
from scipy.special import gammaln

from .problems import ProblemSpec

__all__ = [
    "LEVEL_CAP",
    "Schedule",
    "ScheduleInfeasible",
    "brownian_moment_bound",
    "brownian_moment_exact",
    "choose_grid",
    "choose_level",
    "compute_schedule",
    "fit_holder_exponent",
    "level_quantity",
    "moment_integral_bound",
    "slow_m_rule",
    "temporal_holder_bound",
]

LEVEL_CAP = 64

MRule = Callable[[int], float]


class ScheduleInfeasible(RuntimeError):
    """No admissible level below the cap."""


def identity_m_rule(k: int) -> float:
    return float(k)


def slow_m_rule(exponent: float) -> MRule:
    """``m_k = max(1, floor(k^(2/exponent)))``, so ``m_k^(exponent/2) <= k``."""

    def rule(k: int) -> float:
        return float(max(1, math.floor(k ** (2.0 / exponent) + 1e-12)))

    return rule


def level_quantity(n: int, L: float, T: float, pexp: float, m_rule: MRule = identity_m_rule) -> float:
    """Natural log of ``[(1 + L T) m_n^(-1/2) exp(m_n^(pexp/2) / n)]^n``."""
    m = m_rule(n)
    return n * (math.log1p(L * T) - 0.5 * math.log(m)) + m ** (pexp / 2.0)


def choose_level(
    eps: float,
    L: float,
    T: float,
    pexp: float,
    m_rule: MRule = identity_m_rule,
    cap: int = LEVEL_CAP,
) -> int:
    """Smallest ``n >= 1`` whose level quantity is at most ``eps``.

    Raises:
        ScheduleInfeasible: If no ``n <= cap`` qualifies.
    """
    if not 0.0 < eps <= 1.0:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    target = math.log(eps)
    for n in range(1, cap + 1):
        if level_quantity(n, L, T, pexp, m_rule) <= target:
            return n
    raise ScheduleInfeasible(f"no level n <= {cap} reaches eps = {eps}")


def choose_grid(eps: float) -> int:
    """Smallest integer at least ``eps^-2``."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    k = math.ceil(eps**-2)
    # Guard against rounding in eps^-2 for exact reciprocals such as 0.1.
    if k - 1 >= 1 and (k - 1) * eps * eps >= 1.0:
        k -= 1
    return max(1, k)


# ---------------------------------------------------------------------------
# Brownian moments
# ---------------------------------------------------------------------------


def brownian_moment_bound(d: int, order: float, T: float) -> float:
    """Upper bound ``1 + (1 + 2T)^order (d/2 + order)^order`` on ``E|W_s|^order``."""
    return 1.0 + (1.0 + 2.0 * T) ** order * (d / 2.0 + order) ** order


def brownian_moment_exact(d: int, order: float, s: float) -> float:
    """``E|W_s|^order = (2s)^(order/2) Gamma(d/2 + order/2) / Gamma(d/2)``."""
    if s == 0:
        return 0.0
    log = 0.5 * order * math.log(2.0 * s) + gammaln(d / 2.0 + order / 2.0) - gammaln(d / 2.0)
    return math.exp(log)


def moment_integral_bound(spec: ProblemSpec) -> float:
    """Log of the closed-form bound ``C d^((r+2) m)`` on the moment integral.

    ``m = p^2 q qnorm`` and ``C = kappa (2 + (1+2T)^(2m) (1/2 + 2m)^(2m))``.
    """
    m = spec.moment_order
    log_c = math.log(spec.kappa_value) + np.logaddexp(
        math.log(2.0), 2 * m * math.log1p(2.0 * spec.T) + 2 * m * math.log(0.5 + 2 * m)
    )
    return float(log_c + (spec.r + 2.0) * m * math.log(spec.d))


def moment_integral_mc(spec: ProblemSpec, samples: int = 100_000, seed: int = 0) -> float:
    """Log of a Monte Carlo value of the moment integral for the default measure.

    The measure is Lebesgue measure on ``[0, T] x [0, 1]^d``; the Brownian
    supremum is the exact moment at ``s = T``.
    """
    m = spec.moment_order
    rng = np.random.default_rng(seed)
    x = rng.random((samples, spec.d))
    mean_norm = float(np.mean(np.sum(x * x, axis=1) ** (m / 2)))
    bm = brownian_moment_exact(spec.d, 2 * m, spec.T)
    return math.log(spec.T) + math.log(1.0 + mean_norm + bm)


# ---------------------------------------------------------------------------
# Schedule
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Schedule:
    """Level, grid and gadget accuracies for one ``(d, eps)``.

    Very small or very large quantities are also given as natural logs
    (``log_*`` fields) because they routinely leave double range.
    """

    eps: float
    level: int | None
    grid: int
    log_a: float
    log_b: float
    log_c: float
    log_cd: float
    log_delta: float
    log_gamma: float
    cd_route: str
    theorem_level: int | None

    @property
    def delta(self) -> float:
        return math.exp(self.log_delta)

    @property
    def gamma(self) -> float:
        return math.exp(self.log_gamma)

    @property
    def a(self) -> float:
        return math.exp(self.log_a)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["delta"] = self.delta
        out["gamma"] = self.gamma
        return out


def _logsum(*logs: float) -> float:
    return float(np.logaddexp.reduce(np.array(logs, dtype=np.float64)))


def compute_schedule(
    spec: ProblemSpec,
    eps: float,
    m_rule: MRule = identity_m_rule,
    cd_route: str = "bound",
    theorem_level_cap: int = 10_000_000,
) -> Schedule:
    """Schedule for target accuracy ``eps``.

    ``level`` follows the level rule with the problem's ``L``, ``T`` and
    growth exponent ``p`` under ``m_rule``; it is ``None`` when no level up to
    :data:`LEVEL_CAP` qualifies.  ``theorem_level`` applies the
    stricter rule used for the compiled family (``2L`` in place of ``L``,
    exponent ``q * qnorm`` and the slowly growing ``m``-sequence), scanned up
    to ``theorem_level_cap``; it is ``None`` when that scan finds no level.

    Args:
        spec: Problem and constants.
        eps: Target accuracy in ``(0, 1]``.
        m_rule: Branching sequence for ``level``.
        cd_route: ``"bound"`` for the closed-form moment bound or ``"mc"`` for a
            Monte Carlo value of the moment integral.
        theorem_level_cap: Scan limit for ``theorem_level``.
    """
    if not 0.0 < eps <= 1.0:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    d, T, L = spec.d, spec.T, spec.lipschitz
    p, q, qn, kappa = spec.p, spec.q, spec.qnorm, spec.kappa_value
    lk = math.log(kappa)
    ld = math.log(d)
    log_a = 2 * L * T + 2 * math.log1p(T) + math.log1p(L) + _logsum(lk + p * ld, 0.0) + (p + 2) * math.log(8) + 0.5 * ld
    log_kdp = lk + p * ld
    log_b = (
        (p - 1) * math.log(2)
        + log_kdp
        + (p + 1) * (L * T + math.log1p(T))
        + _logsum(p * log_kdp, 0.0)
        + (p * p - 1) * math.log(3)
    )
    log_c = p * math.log(2) + log_kdp + math.log1p(T) + L * T + 0.5 * math.log(q * qn - 1)
    if cd_route == "bound":
        log_cd = moment_integral_bound(spec) / qn
    elif cd_route == "mc":
        log_cd = moment_integral_mc(spec) / qn
    else:
        raise ValueError(f"unknown c_d route {cd_route!r}")
    log_delta = math.log(eps) - _logsum(
        0.0, math.log(180) + math.log1p(T) + p * math.log(2) + _logsum(log_a, log_b, log_c) + log_cd
    )
    grid = choose_grid(eps)
    inner = _logsum(q * log_c, q * math.log1p(T) + _logsum(q * log_a, q * log_b), q * lk + p * q * ld)
    log_gamma = math.log(eps) - (
        math.log(2)
        + lk
        + spec.r * p * p * q * ld
        + math.log(grid + 1)
        + q * math.log1p((T + 1) ** q)
        + _logsum(0.0, 3 * p * p * q * math.log(3) + log_cd + inner)
    )
    try:
        level = choose_level(eps, L, T, p, m_rule)
    except ScheduleInfeasible:
        level = None
    try:
        theorem_level = _scan_level(eps, 2 * L, T, q * qn, theorem_level_cap)
    except ScheduleInfeasible:
        theorem_level = None
    return Schedule(
        eps=eps,
        level=level,
        grid=grid,
        log_a=log_a,
        log_b=log_b,
        log_c=log_c,
        log_cd=log_cd,
        log_delta=log_delta,
        log_gamma=log_gamma,
        cd_route=cd_route,
        theorem_level=theorem_level,
    )


def _scan_level(eps: float, L: float, T: float, pexp: float, cap: int) -> int:
    """Vectorized level scan under the slowly growing ``m``-sequence."""
    target = math.log(eps)
    start = 1
    block = 1 << 16
    while start <= cap:
        n = np.arange(start, min(cap, start + block - 1) + 1, dtype=np.float64)
        m = np.maximum(1.0, np.floor(n ** (2.0 / pexp) + 1e-12))
        vals = n * (math.log1p(L * T) - 0.5 * np.log(m)) + m ** (pexp / 2.0)
        hit = np.flatnonzero(vals <= target)
        if hit.size:
            return int(n[hit[0]])
        start += block
    raise ScheduleInfeasible(f"no level n <= {cap} reaches eps = {eps}")


# ---------------------------------------------------------------------------
# Time regularity
# ---------------------------------------------------------------------------


def temporal_holder_bound(
    L: float,
    growth: float,
    p: float,
    T: float,
    d: int,
    x_norm: float,
    dt: float,
) -> float:
    """Bound on ``|u(s, x) - u(t, x)|`` in terms of ``sqrt(|s - t|) sqrt(d)``.

    ``growth`` bounds ``|f(0)|``, ``|g|`` and ``|grad g|`` by
    ``growth * (1 + |x|)^p``; the Brownian term uses the exact moment of
    order ``2p`` at ``s = T``.
    """
    moment = brownian_moment_exact(d, 2 * p, T)
    return (
        math.exp(2 * L * T)
        * (T + 1) ** 2
        * (L + 1)
        * (growth + 1)
        * 8 ** (p + 2)
        * (1 + x_norm**p + moment)
        * math.sqrt(abs(dt))
        * math.sqrt(d)
    )


def fit_holder_exponent(u: Callable[[float], float], t0: float, gaps: np.ndarray) -> float:
    """Least-squares slope of ``log |u(t0 + h) - u(t0)|`` against ``log h``."""
    gaps = np.asarray(gaps, dtype=np.float64)
    base = u(t0)
    diffs = np.array([abs(u(t0 + h) - base) for h in gaps])
    if np.any(diffs <= 0):
        raise ValueError("time increments produced zero differences; cannot fit an exponent")
    slope, _ = np.polyfit(np.log(gaps), np.log(diffs), 1)
    return float(slope)
