"""Constraint matrices and the variance lower bound sup_a (a.lam)^2 / (a.C.a).

A set of n linear constraints lam_k = sum_{x in X+} g_k(x) (est(x) - <est>)
bounds the variance of every estimator satisfying them by lam^T C^+ lam,
with C_kl = sum_{x in X+} g_k(x) g_l(x) / p(x|theta).  When lam has a
component in ker(C), no finite-variance estimator satisfies the constraints
and the bound is reported as divergent.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Callable, NamedTuple, Sequence, Union

import numpy as np

from .errors import BoundsError, DegenerateModelError, NotPSDError
from .models import DiscreteModel

FINITE = "finite"
DIVERGENT = "divergent"

CONSTRAINT_KINDS = ("barankin", "ecrb", "crb", "custom")

Estimator = Union[Callable[[np.ndarray], np.ndarray], Sequence[float], np.ndarray]


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds.

    tau_supp
        outcomes with p(x|theta) <= tau_supp are outside X+.  The models
        evaluate probabilities to relative precision, so by default only exact
        zeros are excluded.
    tau_rank
        eigenvalues below ``tau_rank * max_eigenvalue`` span the kernel.
    tau_div
        the bound diverges when ``|P_ker lam| > tau_div * |lam|``.
    """

    tau_supp: float = 0.0
    tau_rank: float = 1e-10
    tau_div: float = 1e-8


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True, eq=False)
class ConstraintSet:
    """Test functions ``g`` (one row per constraint, one column per outcome) and biases ``lam``."""

    g: np.ndarray = field(repr=False)
    lam: np.ndarray
    kind: str
    anchor: float
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        g = np.atleast_2d(np.asarray(self.g, dtype=float))
        lam = np.atleast_1d(np.asarray(self.lam, dtype=float))
        if g.shape[0] == 0 or lam.shape[0] == 0:
            raise BoundsError("a constraint set needs at least one constraint")
        if g.shape[0] != lam.shape[0]:
            raise BoundsError(f"{g.shape[0]} test functions but {lam.shape[0]} biases")
        if self.kind not in CONSTRAINT_KINDS:
            raise BoundsError(f"unknown constraint kind {self.kind!r}")
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "anchor", float(self.anchor))

    def __len__(self) -> int:
        return self.lam.shape[0]

    def extend(self, other: "ConstraintSet") -> "ConstraintSet":
        """Concatenate constraints; the kind degrades to ``custom`` when they differ."""
        kind = self.kind if other.kind == self.kind else "custom"
        return ConstraintSet(
            g=np.vstack([self.g, other.g]),
            lam=np.concatenate([self.lam, other.lam]),
            kind=kind,
            anchor=self.anchor,
            labels=self.labels + other.labels,
        )


@dataclass(frozen=True)
class BoundResult:
    status: str
    value: float | None
    rank: int
    kernel_projection_norm: float
    lambda_norm: float
    smallest_kept_singular_value: float
    condition_number: float
    support_warning: bool = False

    @property
    def finite(self) -> bool:
        return self.status == FINITE

    def to_dict(self) -> dict:
        return asdict(self)


class ConstraintMatrix(NamedTuple):
    matrix: np.ndarray
    support_warning: bool
    support: np.ndarray


def constraint_matrix(
    model: DiscreteModel,
    constraints: ConstraintSet,
    theta: float | None = None,
    tau_supp: float = DEFAULT_TOL.tau_supp,
) -> ConstraintMatrix:
    """C_kl = sum over X+ of g_k g_l / p(.|theta), X+ = {x : p(x|theta) > tau_supp}.

    ``support_warning`` is set when some test function is non-negligible on an
    outcome outside X+; such contributions are dropped, not redistributed.
    """
    theta = constraints.anchor if theta is None else float(theta)
    if constraints.g.shape[1] != model.size:
        raise BoundsError(
            f"test functions live on {constraints.g.shape[1]} outcomes, "
            f"model has {model.size}"
        )
    p = model.prob(theta)
    support = p > tau_supp
    if not support.any():
        raise DegenerateModelError("degenerate model: no outcome has positive probability")
    g = constraints.g
    warning = bool(np.any(np.abs(g[:, ~support]) > tau_supp))
    P = g[:, support] / np.sqrt(p[support])
    C = P @ P.T
    C = 0.5 * (C + C.T)
    return ConstraintMatrix(C, warning, support)


def evaluate_bound(
    C,
    lam,
    tol: Tolerances = DEFAULT_TOL,
    *,
    equilibrate: bool = True,
    support_warning: bool = False,
) -> BoundResult:
    """Evaluate lam^T C^+ lam on the kept eigenspace of C, or flag divergence.

    With ``equilibrate`` the matrix is first brought to unit diagonal by the
    per-constraint rescaling (g_k, lam_k) -> (g_k, lam_k) / sqrt(C_kk), under
    which the supremum is invariant.  Rank, kernel projection and conditioning
    are then reported for the rescaled problem.  A constraint whose diagonal
    entry C_kk (e.g. the Fisher information for the CRB condition) is below
    ``tau_rank`` in absolute terms is treated as a null direction.
    """
    C = np.asarray(C, dtype=float)
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise BoundsError(f"constraint matrix must be square, got shape {C.shape}")
    n = C.shape[0]
    if lam.shape != (n,):
        raise BoundsError(f"bias vector has shape {lam.shape}, expected ({n},)")
    scale = np.max(np.abs(C)) if C.size else 0.0
    if np.max(np.abs(C - C.T)) > 1e-12 * max(scale, 1e-300):
        raise BoundsError("constraint matrix is not symmetric")
    C = 0.5 * (C + C.T)

    d = np.diag(C).copy()
    dmax = d.max() if n else 0.0
    if dmax > 0 and d.min() < -tol.tau_rank * dmax:
        raise NotPSDError("not PSD: negative diagonal entry")
    if equilibrate and dmax > 0:
        active = d > tol.tau_rank
        s = np.where(active, 1.0 / np.sqrt(np.where(active, d, 1.0)), 1.0)
        Ct = C * np.outer(s, s)
        Ct[~active, :] = 0.0
        Ct[:, ~active] = 0.0
        lt = lam * s
    else:
        Ct, lt = C, lam

    w, V = np.linalg.eigh(Ct)
    wmax = w.max() if n else 0.0
    if wmax > 0 and w.min() < -tol.tau_rank * wmax:
        raise NotPSDError(f"not PSD: eigenvalue {w.min():.3e} vs largest {wmax:.3e}")
    keep = w > tol.tau_rank * wmax if wmax > 0 else np.zeros(n, dtype=bool)

    coeff = V.T @ lt
    kernel_norm = float(np.linalg.norm(coeff[~keep]))
    lam_norm = float(np.linalg.norm(lt))
    rank = int(keep.sum())
    smallest = float(w[keep].min()) if rank else 0.0
    cond = float(w[keep].max() / smallest) if rank else float("inf")

    if kernel_norm > tol.tau_div * lam_norm:
        return BoundResult(
            DIVERGENT, None, rank, kernel_norm, lam_norm, smallest, cond, support_warning
        )
    value = float(np.sum(coeff[keep] ** 2 / w[keep]))
    return BoundResult(
        FINITE, value, rank, kernel_norm, lam_norm, smallest, cond, support_warning
    )


def constrained_bound(
    model: DiscreteModel,
    constraints: ConstraintSet,
    theta: float | None = None,
    tol: Tolerances = DEFAULT_TOL,
) -> BoundResult:
    """Build C for ``constraints`` at ``theta`` (default: the set's anchor) and evaluate it."""
    cm = constraint_matrix(model, constraints, theta, tau_supp=tol.tau_supp)
    return evaluate_bound(cm.matrix, constraints.lam, tol, support_warning=cm.support_warning)


def _estimator_values(model: DiscreteModel, estimator: Estimator) -> np.ndarray:
    if callable(estimator):
        values = np.asarray(estimator(model.outcomes), dtype=float)
    else:
        values = np.asarray(estimator, dtype=float)
    if values.shape != (model.size,):
        raise BoundsError(
            f"estimator must assign one value per outcome ({model.size}), got {values.shape}"
        )
    return values


def estimator_variance(model: DiscreteModel, estimator: Estimator, theta: float) -> float:
    """Variance sum_x p(x|theta) (est(x) - <est>)^2 of an estimator given per outcome."""
    values = _estimator_values(model, estimator)
    p = model.prob(theta)
    mean = p @ values
    return float(p @ (values - mean) ** 2)


class EstimatorBound(NamedTuple):
    lam: np.ndarray
    bound: BoundResult
    variance: float


def bound_from_estimator(
    model: DiscreteModel,
    estimator: Estimator,
    test_points,
    theta: float,
    tol: Tolerances = DEFAULT_TOL,
) -> EstimatorBound:
    """Barankin test functions with biases taken from a given estimator.

    The estimator satisfies its own bias conditions, so whenever the bound is
    finite it cannot exceed the estimator's variance.
    """
    values = _estimator_values(model, estimator)
    points = np.atleast_1d(np.asarray(test_points, dtype=float))
    g = np.array([model.prob(t) for t in points])
    p = model.prob(theta)
    centered = values - p @ values
    # the estimator's constraint sums run over the support at theta only
    lam = g[:, p > tol.tau_supp] @ centered[p > tol.tau_supp]
    cs = ConstraintSet(g=g, lam=lam, kind="custom", anchor=theta)
    return EstimatorBound(lam, constrained_bound(model, cs, theta, tol), float(p @ centered**2))
