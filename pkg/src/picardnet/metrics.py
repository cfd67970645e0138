"""Monte Carlo error norms over sampling measures."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["MeasureSpec", "lq_error"]


@dataclass(frozen=True)
class MeasureSpec:
    """Uniform measure on ``[0, T] x [lo, hi]^d`` (time first).

    With ``normalization="probability"`` the measure has mass one; with
    ``"lebesgue"`` it has mass equal to the box volume.
    """

    d: int
    T: float
    lo: float = 0.0
    hi: float = 1.0
    normalization: str = "probability"

    def __post_init__(self) -> None:
        if not self.lo < self.hi:
            raise ValueError("need lo < hi")
        if self.d < 1 or not self.T > 0:
            raise ValueError("need d >= 1 and T > 0")
        if self.normalization not in ("probability", "lebesgue"):
            raise ValueError(f"unknown normalization {self.normalization!r}")

    @property
    def mass(self) -> float:
        if self.normalization == "probability":
            return 1.0
        return self.T * (self.hi - self.lo) ** self.d

    def sample(self, n: int, seed: int = 0) -> np.ndarray:
        rng = np.random.default_rng(seed)
        t = rng.uniform(0.0, self.T, size=(n, 1))
        x = rng.uniform(self.lo, self.hi, size=(n, self.d))
        return np.concatenate([t, x], axis=1)


def lq_error(
    approx: Callable[[np.ndarray], np.ndarray],
    oracle: Callable[[np.ndarray], np.ndarray],
    measure: MeasureSpec,
    qnorm: float = 2.0,
    n_samples: int = 10_000,
    seed: int = 0,
) -> tuple[float, float]:
    """Monte Carlo ``L^q`` distance with a jackknife standard error.

    Both callables take an array of shape ``(n, d + 1)`` with time first and
    return ``(n,)`` values.
    """
    if qnorm < 1:
        raise ValueError("qnorm must be at least 1")
    pts = measure.sample(n_samples, seed)
    diff = np.abs(np.asarray(approx(pts), dtype=np.float64) - np.asarray(oracle(pts), dtype=np.float64))
    powers = measure.mass * diff**qnorm
    n = powers.size
    estimate = float(np.mean(powers)) ** (1.0 / qnorm)
    if n < 2:
        return estimate, float("nan")
    loo = ((powers.sum() - powers) / (n - 1)) ** (1.0 / qnorm)
    se = float(np.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2)))
    return estimate, se
