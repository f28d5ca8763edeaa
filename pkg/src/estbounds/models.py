"""Parametric outcome distributions p(x|theta) with analytic theta-derivatives.

Repeated measurements are represented through their sufficient statistic:
the number of '1' outcomes for m qubit measurements (binomial over
{0, ..., m}) and the total count for m Poisson draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.special import comb, gammaln, xlogy

from .errors import BoundsError

# Tail mass allowed to fall outside a truncated outcome range.
TAIL_MASS = 1e-12
_DOMAIN_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class DiscreteModel:
    """Base class: finite (possibly truncated) outcome space and a closed theta interval."""

    outcomes: np.ndarray = field(repr=False)
    domain: tuple[float, float]

    family = "abstract"

    def _check_theta(self, theta: float) -> float:
        theta = float(theta)
        lo, hi = self.domain
        slack = _DOMAIN_SLACK * max(1.0, abs(lo), abs(hi))
        if not (lo - slack <= theta <= hi + slack):
            raise BoundsError(f"theta={theta!r} outside model domain [{lo}, {hi}]")
        return min(max(theta, lo), hi)

    @property
    def size(self) -> int:
        return len(self.outcomes)

    def prob(self, theta: float) -> np.ndarray:
        raise NotImplementedError

    def dprob(self, theta: float) -> np.ndarray:
        raise NotImplementedError

    def fisher_information(self, theta: float, tau_supp: float = 0.0) -> float:
        """Classical Fisher information sum_x (dp)^2 / p over the support."""
        p = self.prob(theta)
        dp = self.dprob(theta)
        support = p > tau_supp
        return float(np.sum(dp[support] ** 2 / p[support]))

    def params(self) -> dict[str, Any]:
        raise NotImplementedError

    def to_dict(self) -> dict[str, Any]:
        return {
            "family": self.family,
            "parameters": self.params(),
            "truncation": self.size - 1,
        }


@dataclass(frozen=True, eq=False)
class QubitBinomial(DiscreteModel):
    """m projective measurements of a qubit with Bloch-vector length r."""

    m: int = 1
    r: float = 1.0

    family = "qubit"

    def _q(self, theta: float) -> tuple[float, float, float]:
        # 1 -+ r cos(theta) written as sums of nonnegative terms (no cancellation)
        q1 = 0.5 * (1.0 - self.r) + self.r * math.sin(0.5 * theta) ** 2
        q0 = 0.5 * (1.0 - self.r) + self.r * math.cos(0.5 * theta) ** 2
        dq1 = 0.5 * self.r * math.sin(theta)
        return q0, q1, dq1

    def prob(self, theta: float) -> np.ndarray:
        theta = self._check_theta(theta)
        q0, q1, _ = self._q(theta)
        k = self.outcomes
        return comb(self.m, k) * q1**k * q0 ** (self.m - k)

    def dprob(self, theta: float) -> np.ndarray:
        theta = self._check_theta(theta)
        q0, q1, dq1 = self._q(theta)
        k = self.outcomes
        m = self.m
        # dq0 = -dq1; guard 0**(-1) at the ends of the outcome range
        up = np.where(k > 0, k * q1 ** np.maximum(k - 1, 0), 0.0) * q0 ** (m - k)
        down = np.where(k < m, (m - k) * q0 ** np.maximum(m - k - 1, 0), 0.0) * q1**k
        return comb(m, k) * (up - down) * dq1

    def params(self) -> dict[str, Any]:
        return {"m": self.m, "r": self.r}


@dataclass(frozen=True, eq=False)
class PoissonCount(DiscreteModel):
    """Total count of m Poisson draws, parametrized by the zero-count probability.

    Each draw has mean mu = -ln(theta), so p(0|theta) = theta per draw and
    the total s is Poisson with mean m*mu.
    """

    m: int = 1
    theta_min: float = 0.5

    family = "poisson"

    def _pmf(self, theta: float) -> np.ndarray:
        lam = -self.m * math.log(theta)
        s = self.outcomes
        # xlogy gives the theta=1 limit p = delta_{s0}
        return np.exp(xlogy(s, lam) - lam - gammaln(s + 1.0))

    def prob(self, theta: float) -> np.ndarray:
        return self._pmf(self._check_theta(theta))

    def dprob(self, theta: float) -> np.ndarray:
        theta = self._check_theta(theta)
        p = self._pmf(theta)
        shifted = np.concatenate(([0.0], p[:-1]))
        return (self.m / theta) * (p - shifted)

    def params(self) -> dict[str, Any]:
        return {"m": self.m, "theta_min": self.theta_min}


@dataclass(frozen=True, eq=False)
class Kronecker(DiscreteModel):
    """p(x|theta_k) = delta_{xk} on a fixed parameter grid."""

    grid: tuple[float, ...] = ()

    family = "kronecker"

    def index(self, theta: float) -> int:
        theta = self._check_theta(theta)
        g = np.asarray(self.grid)
        k = int(np.argmin(np.abs(g - theta)))
        if abs(g[k] - theta) > _DOMAIN_SLACK * max(1.0, abs(theta)):
            raise BoundsError(f"theta={theta!r} is not a grid point of the Kronecker model")
        return k

    def prob(self, theta: float) -> np.ndarray:
        p = np.zeros(self.size)
        p[self.index(theta)] = 1.0
        return p

    def dprob(self, theta: float) -> np.ndarray:
        self.index(theta)
        return np.zeros(self.size)

    def params(self) -> dict[str, Any]:
        return {"D": self.size, "grid": list(self.grid)}


def qubit_binomial(m: int, r: float = 1.0) -> QubitBinomial:
    """Binomial model for m repeated qubit measurements, theta in [0, pi]."""
    if int(m) != m or m < 1:
        raise BoundsError(f"m must be a positive integer, got {m!r}")
    if not (0.0 < r <= 1.0):
        raise BoundsError(f"Bloch-vector length r must lie in (0, 1], got {r!r}")
    m = int(m)
    return QubitBinomial(
        outcomes=np.arange(m + 1), domain=(0.0, math.pi), m=m, r=float(r)
    )


def poisson_truncation(m: int, theta_min: float) -> int:
    """Largest retained total count S_max for the working range [theta_min, 1]."""
    lam = -m * math.log(theta_min)
    return math.ceil(lam + 12.0 * math.sqrt(lam) + 30.0)


def poisson_model(theta: float, m: int = 1, theta_min: float | None = None) -> PoissonCount:
    """Poisson total-count model; truncation is sized for theta' in [theta_min, 1].

    ``theta_min`` defaults to the anchor ``theta``.
    """
    if not (0.0 < theta < 1.0):
        raise BoundsError(f"theta must lie in (0, 1), got {theta!r}")
    if int(m) != m or m < 1:
        raise BoundsError(f"m must be a positive integer, got {m!r}")
    theta_min = float(theta if theta_min is None else min(theta_min, theta))
    if theta_min <= 0.0:
        raise BoundsError("theta_min must be positive")
    s_max = poisson_truncation(int(m), theta_min)
    return PoissonCount(
        outcomes=np.arange(s_max + 1),
        domain=(theta_min, 1.0),
        m=int(m),
        theta_min=theta_min,
    )


def kronecker_model(D: int, grid=None) -> Kronecker:
    if int(D) != D or D < 1:
        raise BoundsError(f"D must be a positive integer, got {D!r}")
    grid = np.arange(D, dtype=float) if grid is None else np.asarray(grid, dtype=float)
    if grid.shape != (D,):
        raise BoundsError(f"grid must have length D={D}")
    if D > 1 and np.any(np.diff(grid) <= 0):
        raise BoundsError("grid must be strictly increasing")
    return Kronecker(
        outcomes=np.arange(D),
        domain=(float(grid[0]), float(grid[-1])),
        grid=tuple(float(g) for g in grid),
    )


def model_from_dict(spec: dict[str, Any]) -> DiscreteModel:
    """Inverse of ``DiscreteModel.to_dict`` (the ``truncation`` key is informational)."""
    family = spec.get("family")
    params = dict(spec.get("parameters", {}))
    if family == "qubit":
        return qubit_binomial(params.get("m", 1), params.get("r", 1.0))
    if family == "poisson":
        # the anchor only sizes the truncation, so the working minimum suffices
        return poisson_model(params["theta_min"], params.get("m", 1))
    if family == "kronecker":
        grid = params.get("grid")
        D = params.get("D", len(grid) if grid is not None else None)
        return kronecker_model(D, grid)
    raise BoundsError(f"unknown model family {family!r}")
