"""Closed-form bounds and estimator moments for the Poisson and qubit models.

Powers theta**a are evaluated as exp(a * ln(theta)).
"""

from __future__ import annotations

import math

import numpy as np

from .errors import BoundsError


def _check_unit(theta: float) -> float:
    if not (0.0 < theta < 1.0):
        raise BoundsError(f"theta must lie in (0, 1), got {theta!r}")
    return math.log(theta)


def poisson_barankin(theta: float, m: int) -> float:
    """Barankin bound theta^2 (theta^(-1/m) - 1) for m Poisson draws."""
    ln = _check_unit(theta)
    return theta**2 * math.expm1(-ln / m)


def poisson_crb(theta: float, m: int) -> float:
    """-theta^2 ln(theta) / m, the inverse of m times the per-draw Fisher information."""
    ln = _check_unit(theta)
    return -(theta**2) * ln / m


def poisson_mle_mean(theta: float, m: int) -> float:
    """E[exp(-mean count)] = theta^(m (1 - e^(-1/m)))."""
    ln = _check_unit(theta)
    return math.exp(-m * math.expm1(-1.0 / m) * ln)


def poisson_mle_variance(theta: float, m: int) -> float:
    """Variance of exp(-mean count) from the moment generating function of the total count."""
    ln = _check_unit(theta)
    second = math.exp(-m * math.expm1(-2.0 / m) * ln)
    return second - poisson_mle_mean(theta, m) ** 2


def qubit_crb(theta: float, m: int, r: float = 1.0) -> float:
    return (1.0 - (r * math.cos(theta)) ** 2) / (m * r**2 * math.sin(theta) ** 2)


def mle_poisson_estimator(counts) -> float:
    """argmax over theta in [0, 1] of theta^m (-ln theta)^s, which is exp(-s/m).

    Setting d/dtheta [m ln(theta) + s ln(-ln theta)] = 0 gives ln(theta) = -s/m.
    """
    counts = np.asarray(counts)
    if counts.size == 0:
        raise BoundsError("need at least one count")
    if np.any(counts < 0):
        raise BoundsError("counts must be nonnegative")
    return math.exp(-float(np.mean(counts)))
