"""Constraint families (Barankin, extended CRB, CRB) and test-point searches."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .engine import (
    DEFAULT_TOL,
    BoundResult,
    ConstraintSet,
    Tolerances,
    constrained_bound,
)
from .errors import BoundsError
from .models import DiscreteModel

SCAN_POINTS = 64
GOLDEN_XTOL = 1e-10
EXCLUSION = 1e-6  # fraction of the search interval kept clear around theta

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class TestPointGrid:
    points: tuple[float, ...]
    includes_truth: bool = True

    __test__ = False  # not a pytest class

    def __post_init__(self):
        pts = tuple(float(t) for t in np.atleast_1d(self.points))
        if not pts:
            raise BoundsError("test-point grid is empty")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise BoundsError("test points must be strictly increasing")
        object.__setattr__(self, "points", pts)

    @classmethod
    def spaced(cls, theta: float, n: int, spacing: float) -> "TestPointGrid":
        """theta_k = theta + (k - 1) * spacing for k = 1..n."""
        return cls(tuple(theta + k * spacing for k in range(n)), includes_truth=True)

    def __len__(self) -> int:
        return len(self.points)

    def check(self, model: DiscreteModel, theta: float | None = None) -> None:
        lo, hi = model.domain
        for t in self.points:
            if not (lo - 1e-12 <= t <= hi + 1e-12):
                raise BoundsError(f"test point {t!r} outside model domain [{lo}, {hi}]")
        if self.includes_truth and theta is not None and abs(self.points[0] - theta) > 1e-12:
            raise BoundsError("grid flagged includes_truth but its first point is not theta")


def _as_grid(grid) -> TestPointGrid:
    return grid if isinstance(grid, TestPointGrid) else TestPointGrid(tuple(grid))


def barankin_constraints(model: DiscreteModel, grid, theta: float) -> ConstraintSet:
    """Unbiasedness at each test point: g_k = p(.|theta_k), lam_k = theta_k - theta.

    A plain sequence of points may hold theta anywhere; a ``TestPointGrid``
    flagged ``includes_truth`` must start at theta.
    """
    explicit = isinstance(grid, TestPointGrid)
    grid = _as_grid(grid)
    grid.check(model, theta if explicit else None)
    pts = np.array(grid.points)
    return ConstraintSet(
        g=np.array([model.prob(t) for t in pts]),
        lam=pts - theta,
        kind="barankin",
        anchor=theta,
        labels=tuple(f"unbiased@{t:.12g}" for t in pts),
    )


def ecrb_constraints(model: DiscreteModel, grid, theta: float | None = None) -> ConstraintSet:
    """Unit slope of the estimator mean at each test point: g_k = dp(.|theta_k), lam_k = 1.

    The anchor defaults to the first test point, which must then be the truth.
    """
    grid = _as_grid(grid)
    if theta is None:
        if not grid.includes_truth:
            raise BoundsError("anchor theta required when the grid does not include the truth")
        theta = grid.points[0]
    grid.check(model)
    return ConstraintSet(
        g=np.array([model.dprob(t) for t in grid.points]),
        lam=np.ones(len(grid)),
        kind="ecrb",
        anchor=theta,
        labels=tuple(f"slope@{t:.12g}" for t in grid.points),
    )


def crb_constraint(model: DiscreteModel, theta: float) -> ConstraintSet:
    """Single local condition; the resulting bound is 1/F(theta)."""
    return ConstraintSet(
        g=model.dprob(theta)[None, :],
        lam=np.ones(1),
        kind="crb",
        anchor=theta,
        labels=(f"slope@{theta:.12g}",),
    )


def two_point_bound(
    model: DiscreteModel, theta: float, theta_prime: float, tol: Tolerances = DEFAULT_TOL
) -> BoundResult:
    """Barankin bound for the test points {theta, theta'}."""
    pts = sorted((theta, theta_prime))
    return constrained_bound(model, barankin_constraints(model, pts, theta), theta, tol)


def _golden_max(f, a: float, b: float, xtol: float) -> tuple[float, float]:
    """Maximize f on [a, b]; returns (x, f(x)) including the end points as candidates."""
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while abs(b - a) > xtol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    candidates = [(fc, c), (fd, d), (f(a), a), (f(b), b)]
    fx, x = max(candidates, key=lambda t: (t[0], -t[1]))
    return x, fx


def _default_interval(model: DiscreteModel, theta: float) -> tuple[float, float]:
    lo, hi = model.domain
    return (theta, hi) if hi > theta else (lo, theta)


def _scan_points(theta: float, interval, count: int) -> tuple[np.ndarray, float]:
    a, b = (float(v) for v in interval)
    if not b > a:
        raise BoundsError(f"empty search interval ({a}, {b})")
    eps = EXCLUSION * (b - a)
    pts = np.linspace(a, b, count)
    near = np.abs(pts - theta) < eps
    pts[near] = np.where(theta + eps <= b, theta + eps, theta - eps)
    return np.unique(pts), eps


@dataclass(frozen=True)
class HCRResult:
    value: float
    theta_opt: float
    bound: BoundResult
    n_divergent: int


def hcr_bound(
    model: DiscreteModel,
    theta: float,
    search_interval=None,
    tol: Tolerances = DEFAULT_TOL,
    scan_points: int = SCAN_POINTS,
    xtol: float = GOLDEN_XTOL,
) -> HCRResult:
    """Hammersley-Chapman-Robbins bound: two-point bound maximized over theta'.

    A uniform scan of ``scan_points`` locations brackets the maximum, which is
    then refined by golden-section search to a bracket narrower than ``xtol``.
    The search interval defaults to (theta, upper end of the model domain].
    The coalescence limit theta' -> theta (the CRB) is included as a candidate,
    reported with ``theta_opt == theta``.
    """
    interval = _default_interval(model, theta) if search_interval is None else search_interval
    lo, hi = model.domain
    if interval[0] < lo - 1e-12 or interval[1] > hi + 1e-12:
        raise BoundsError(f"search interval {interval} leaves the model domain [{lo}, {hi}]")
    pts, eps = _scan_points(theta, interval, scan_points)

    def objective(t):
        res = two_point_bound(model, theta, t, tol)
        return res.value if res.finite else -math.inf

    values = np.array([objective(t) for t in pts])
    n_div = int(np.sum(np.isneginf(values)))
    if n_div == len(pts):
        raise BoundsError("all scanned two-point bounds diverge")
    i = int(np.argmax(values))
    a = pts[max(i - 1, 0)]
    b = pts[min(i + 1, len(pts) - 1)]
    # keep the refinement bracket on the side of theta holding the maximum
    if a < theta < b:
        if pts[i] > theta:
            a = theta + eps
        else:
            b = theta - eps
    x, fx = _golden_max(objective, a, b, xtol)
    if fx < values[i]:
        x, fx = float(pts[i]), float(values[i])
    # theta' -> theta is the CRB; it wins when the quotient peaks at coalescence
    local = constrained_bound(model, crb_constraint(model, theta), theta, tol)
    if local.finite and local.value > fx:
        return HCRResult(local.value, float(theta), local, n_div)
    return HCRResult(float(fx), float(x), two_point_bound(model, theta, x, tol), n_div)


@dataclass(frozen=True)
class SweepResult:
    n: int
    strategy: str
    value: float | None
    points: tuple[float, ...] | None
    n_evaluated: int
    n_divergent: int
    n_ill_conditioned: int

    @property
    def all_divergent(self) -> bool:
        return self.value is None


SWEEP_STRATEGIES = ("grid-scan", "coordinate-refine")


def barankin_sweep(
    model: DiscreteModel,
    theta: float,
    n: int,
    strategy: str = "grid-scan",
    search_interval=None,
    resolution: int = SCAN_POINTS,
    tol: Tolerances = DEFAULT_TOL,
    max_sweeps: int = 50,
) -> SweepResult:
    """Best fixed-n Barankin bound over placements of n - 1 extra test points.

    ``grid-scan`` evaluates every combination of n - 1 distinct points from a
    uniform grid of ``resolution`` locations; placements with a divergent
    bound or a rank-deficient constraint matrix are counted and skipped.
    ``coordinate-refine`` starts from the grid-scan optimum and maximizes one
    coordinate at a time by golden-section search inside its grid cell.
    """
    if n < 2:
        raise BoundsError("a sweep needs n >= 2 test points")
    if strategy not in SWEEP_STRATEGIES:
        raise BoundsError(f"unknown sweep strategy {strategy!r}")
    interval = _default_interval(model, theta) if search_interval is None else search_interval
    pts, eps = _scan_points(theta, interval, resolution)
    step = (interval[1] - interval[0]) / max(resolution - 1, 1)

    counts = {"evaluated": 0, "divergent": 0, "ill": 0}

    def evaluate(extra) -> float | None:
        placement = np.sort(np.concatenate(([theta], extra)))
        if np.any(np.diff(placement) <= 0):
            return None
        counts["evaluated"] += 1
        res = constrained_bound(model, barankin_constraints(model, placement, theta), theta, tol)
        if not res.finite:
            counts["divergent"] += 1
            return None
        if res.rank < n:
            counts["ill"] += 1
            return None
        return res.value

    best_val, best_extra = None, None
    for combo in itertools.combinations(pts, n - 1):
        v = evaluate(np.array(combo))
        if v is not None and (best_val is None or v > best_val):
            best_val, best_extra = v, np.array(combo)

    if best_val is not None and strategy == "coordinate-refine":
        a_int, b_int = (float(v) for v in interval)
        for _ in range(max_sweeps):
            before = best_val
            for j in range(n - 1):
                lo = max(best_extra[j] - step, a_int)
                hi = min(best_extra[j] + step, b_int)
                if lo < theta < hi:
                    if best_extra[j] > theta:
                        lo = theta + eps
                    else:
                        hi = theta - eps

                def f(t, j=j):
                    trial = best_extra.copy()
                    trial[j] = t
                    v = evaluate(trial)
                    return -math.inf if v is None else v

                x, fx = _golden_max(f, lo, hi, GOLDEN_XTOL)
                if fx > best_val:
                    best_val = fx
                    best_extra = best_extra.copy()
                    best_extra[j] = x
            if best_val - before <= 1e-14 * abs(best_val):
                break

    placement = None if best_extra is None else tuple(float(t) for t in np.sort(np.concatenate(([theta], best_extra))))
    return SweepResult(
        n=n,
        strategy=strategy,
        value=best_val,
        points=placement,
        n_evaluated=counts["evaluated"],
        n_divergent=counts["divergent"],
        n_ill_conditioned=counts["ill"],
    )


def min_grid_spacing(a: float, b: float, D: int) -> float:
    """Finest equidistant test-point spacing on [a, b] for a D-outcome measurement."""
    if not b > a:
        raise BoundsError("need b > a")
    if D < 2:
        raise BoundsError("need at least D = 2 outcomes")
    return (b - a) / (D - 1)


def min_grid_spacing_iid(a: float, b: float, m: int) -> float:
    """Same for m repetitions of a two-outcome measurement (D = m + 1)."""
    if m < 1:
        raise BoundsError("need m >= 1")
    return min_grid_spacing(a, b, m + 1)
