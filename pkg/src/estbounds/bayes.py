"""Flat-prior Bayesian posteriors for the Poisson zero-count parameter."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import BoundsError
from .reference import poisson_crb

N_NODES = 20001


@lru_cache(maxsize=8)
def simpson_rule(n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and composite Simpson weights on [0, 1] (n_nodes must be odd)."""
    if n_nodes < 3 or n_nodes % 2 == 0:
        raise BoundsError(f"Simpson's rule needs an odd node count >= 3, got {n_nodes}")
    x = np.linspace(0.0, 1.0, n_nodes)
    w = np.full(n_nodes, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    w *= (x[1] - x[0]) / 3.0
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=8)
def theta_rule(n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Simpson nodes and weights for theta = t^2 with t uniform on [0, 1].

    Grading the nodes toward theta = 0 resolves posteriors whose mass sits
    at very small theta (total count much larger than the number of draws),
    which a uniform theta-grid leaves inside its first cell.
    """
    t, w = simpson_rule(n_nodes)
    x = t * t
    wx = 2.0 * t * w
    x.setflags(write=False)
    wx.setflags(write=False)
    return x, wx


@dataclass(frozen=True, eq=False)
class PosteriorDensity:
    grid: np.ndarray = field(repr=False)
    density: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    residual: float

    def moment(self, k: int) -> float:
        return float(self.weights @ (self.grid**k * self.density))

    def mean(self) -> float:
        return self.moment(1)

    def variance(self) -> float:
        mu = self.mean()
        return float(self.weights @ ((self.grid - mu) ** 2 * self.density))


def log_likelihood(theta: np.ndarray, s: int, m: int) -> np.ndarray:
    """ln[theta^m (-ln theta)^s] up to constants, with the limits at theta = 0 and 1."""
    out = np.empty_like(theta, dtype=float)
    inner = (theta > 0.0) & (theta < 1.0)
    t = theta[inner]
    out[inner] = m * np.log(t) + (s * np.log(-np.log(t)) if s else 0.0)
    out[theta <= 0.0] = -math.inf if m > 0 else (0.0 if s == 0 else math.inf)
    out[theta >= 1.0] = 0.0 if s == 0 else -math.inf
    return out


def posterior(counts, prior: str = "flat", n_nodes: int = N_NODES) -> PosteriorDensity:
    """Posterior over theta in [0, 1] after observing i.i.d. Poisson counts."""
    if prior != "flat":
        raise BoundsError(f"unsupported prior {prior!r}")
    counts = np.asarray(counts, dtype=np.int64).ravel()
    if np.any(counts < 0):
        raise BoundsError("counts must be nonnegative")
    return posterior_from_total(int(counts.sum()), counts.size, n_nodes)


def posterior_from_total(s: int, m: int, n_nodes: int = N_NODES) -> PosteriorDensity:
    """Posterior given the sufficient statistic s = sum of m counts."""
    if m == 0 and s > 0:
        raise BoundsError("positive total count from zero draws")
    x, w = theta_rule(n_nodes)
    logl = log_likelihood(x, s, m)
    logl -= logl[np.isfinite(logl)].max()
    lik = np.exp(logl)
    density = lik / (w @ lik)
    return PosteriorDensity(x, density, w, float(abs(w @ density - 1.0)))


def posterior_variance(p: PosteriorDensity) -> float:
    return p.variance()


def sample_poisson(rng: np.random.Generator, mean: float, size: int) -> np.ndarray:
    """Inverse-CDF sampling: accumulate pmf terms until the CDF passes a uniform draw."""
    out = np.empty(size, dtype=np.int64)
    p0 = math.exp(-mean)
    for i in range(size):
        u = rng.random()
        k, pk = 0, p0
        cdf = pk
        while cdf < u:
            k += 1
            pk *= mean / k
            cdf += pk
            if pk == 0.0 and k > mean:
                break
        out[i] = k
    return out


def sample_stream(seed: int, index: int) -> np.random.Generator:
    """PCG64 stream for sample ``index``, independent of evaluation order."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


@dataclass(frozen=True)
class SampleRecord:
    index: int
    total_count: int
    posterior_mean: float
    posterior_variance: float


@dataclass(frozen=True)
class Fig3Result:
    theta: float
    m: int
    ratio: float
    stderr: float
    crb: float
    records: tuple[SampleRecord, ...] = field(repr=False)


def fig3_protocol(
    theta: float,
    m: int,
    n_samples: int = 200,
    seed: int = 0,
    n_nodes: int = N_NODES,
) -> Fig3Result:
    """Average posterior variance over simulated data, in units of the CRB.

    Each sample draws m counts with mean -ln(theta); ``stderr`` is the standard
    error of the averaged ratio (NaN for a single sample).
    """
    if not (0.0 < theta < 1.0):
        raise BoundsError(f"theta must lie in (0, 1), got {theta!r}")
    if m < 1 or n_samples < 1:
        raise BoundsError("m and n_samples must be positive")
    mu = -math.log(theta)
    crb = poisson_crb(theta, m)
    by_total: dict[int, tuple[float, float]] = {}
    records = []
    for i in range(n_samples):
        s = int(sample_poisson(sample_stream(seed, i), mu, m).sum())
        if s not in by_total:
            post = posterior_from_total(s, m, n_nodes)
            by_total[s] = (post.mean(), post.variance())
        records.append(SampleRecord(i, s, *by_total[s]))
    ratios = np.array([r.posterior_variance for r in records]) / crb
    stderr = float(ratios.std(ddof=1) / math.sqrt(n_samples)) if n_samples > 1 else math.nan
    return Fig3Result(theta, m, float(ratios.mean()), stderr, crb, tuple(records))
