"""Variance lower bounds under linear unbiasedness constraints.

Barankin-type, Hammersley-Chapman-Robbins, Cramer-Rao and extended
Cramer-Rao bounds on discrete measurement models, with rank diagnostics that
detect when no finite-variance estimator satisfies the constraints, plus
closed-form Poisson references, flat-prior Bayesian posteriors and quantum
(Omega superoperator, pure-state QFI) counterparts.
"""

from .constraints import (
    TestPointGrid,
    barankin_constraints,
    barankin_sweep,
    crb_constraint,
    ecrb_constraints,
    hcr_bound,
    min_grid_spacing,
    min_grid_spacing_iid,
)
from .engine import (
    BoundResult,
    ConstraintSet,
    Tolerances,
    bound_from_estimator,
    constrained_bound,
    constraint_matrix,
    estimator_variance,
    evaluate_bound,
)
from .models import DiscreteModel, kronecker_model, poisson_model, qubit_binomial

__version__ = "0.1.0"

__all__ = [
    "BoundResult",
    "ConstraintSet",
    "DiscreteModel",
    "TestPointGrid",
    "Tolerances",
    "barankin_constraints",
    "barankin_sweep",
    "bound_from_estimator",
    "constrained_bound",
    "constraint_matrix",
    "crb_constraint",
    "ecrb_constraints",
    "estimator_variance",
    "evaluate_bound",
    "hcr_bound",
    "kronecker_model",
    "min_grid_spacing",
    "min_grid_spacing_iid",
    "poisson_model",
    "qubit_binomial",
]
