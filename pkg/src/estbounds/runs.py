"""Figure-data tables and single-bound records driven by a RunConfig.

Every runner returns a list of flat dict rows in a deterministic order
(sorted by theta, then m, then n where present).
"""

from __future__ import annotations

import math

import numpy as np

from . import reference
from .bayes import fig3_protocol
from .config import RunConfig
from .constraints import (
    TestPointGrid,
    barankin_constraints,
    crb_constraint,
    ecrb_constraints,
)
from .engine import constrained_bound
from .models import DiscreteModel, kronecker_model, poisson_model, qubit_binomial
from .quantum import RegularizedPureFamily, coherent_state, q_ecrb_matrix, qfi_pure

FIG_THETA = math.pi / 4
FIG_SPACING = math.pi / 6
FIG3_THETAS = (0.1, 0.7)
FIG3_M = (1, 2, 3, 4, 5, 7, 10, 15, 20, 30, 50, 70, 100, 150, 200)
QUANTUM_THETAS = (0.1, 0.3, 0.5, 0.9)
REGULARIZATION = (1e-3, 1e-4, 1e-5)

FIG12_COLUMNS = ("m", "n", "status", "bound", "crb", "rank", "kernel_projection_norm", "condition_number")
FIG3_COLUMNS = ("theta", "m", "barankin_ratio", "mle_ratio", "bayes_ratio", "bayes_stderr", "n_samples")
SAMPLE_COLUMNS = ("theta", "m", "sample", "total_count", "posterior_mean", "posterior_variance")
BOUND_COLUMNS = (
    "family", "kind", "theta", "test_points", "status", "value", "rank",
    "kernel_projection_norm", "lambda_norm", "smallest_kept_singular_value",
    "condition_number", "support_warning",
)
QUANTUM_COLUMNS = (
    "theta", "qfi_pure", "qfi_closed_form", "classical_fisher", "rel_err_closed_form",
    "rel_err_classical", "qfi_regularized_extrapolated", "rel_err_regularized",
)


def _qubit_sweep(config: RunConfig, kind: str) -> list[dict]:
    theta = FIG_THETA if config.theta is None else config.theta
    spacing = FIG_SPACING if config.spacing is None else config.spacing
    tol = config.tolerances.engine()
    rows = []
    for m in config.ms():
        model = qubit_binomial(m, config.r)
        crb = reference.qubit_crb(theta, m, config.r)
        for n in sorted(config.n_values):
            grid = TestPointGrid.spaced(theta, n, spacing)
            if kind == "barankin":
                cs = barankin_constraints(model, grid, theta)
            else:
                cs = ecrb_constraints(model, grid, theta)
            res = constrained_bound(model, cs, theta, tol)
            rows.append({
                "m": m,
                "n": n,
                "status": res.status,
                "bound": res.value,
                "crb": crb,
                "rank": res.rank,
                "kernel_projection_norm": res.kernel_projection_norm,
                "condition_number": res.condition_number,
            })
    return rows


def run_fig1(config: RunConfig) -> list[dict]:
    """Barankin bound on m qubit measurements for evenly spaced test points."""
    return _qubit_sweep(config, "barankin")


def run_fig2(config: RunConfig) -> list[dict]:
    """Extended CRB (unit slope at every test point) on the same grids."""
    return _qubit_sweep(config, "ecrb")


def run_fig3(config: RunConfig) -> tuple[list[dict], list[dict]]:
    """Poisson comparison normalized by the CRB; returns (table, per-sample records)."""
    thetas = FIG3_THETAS if config.thetas is None else tuple(config.thetas)
    ms = FIG3_M if config.m_values is None else tuple(sorted(set(config.m_values)))
    rows, samples = [], []
    for theta in sorted(thetas):
        for m in ms:
            crb = reference.poisson_crb(theta, m)
            bayes = fig3_protocol(theta, m, config.n_samples, config.seed, config.tolerances.n_nodes)
            rows.append({
                "theta": theta,
                "m": m,
                "barankin_ratio": reference.poisson_barankin(theta, m) / crb,
                "mle_ratio": reference.poisson_mle_variance(theta, m) / crb,
                "bayes_ratio": bayes.ratio,
                "bayes_stderr": bayes.stderr,
                "n_samples": config.n_samples,
            })
            samples.extend(
                {
                    "theta": theta,
                    "m": m,
                    "sample": rec.index,
                    "total_count": rec.total_count,
                    "posterior_mean": rec.posterior_mean,
                    "posterior_variance": rec.posterior_variance,
                }
                for rec in bayes.records
            )
    return rows, samples


def build_model(config: RunConfig) -> DiscreteModel:
    spec = config.model
    if spec.family == "qubit":
        return qubit_binomial(spec.m, spec.r)
    if spec.family == "poisson":
        return poisson_model(config.theta, spec.m, spec.theta_min)
    D = spec.D if spec.D is not None else len(spec.grid or ())
    return kronecker_model(D, spec.grid)


def run_bound(config: RunConfig) -> dict:
    """Generic entry point: any model, constraint family and explicit test points."""
    model = build_model(config)
    spec = config.constraint
    theta = config.theta
    tol = config.tolerances.engine()
    if spec.kind == "crb":
        cs = crb_constraint(model, theta)
        points = [theta]
    else:
        if spec.test_points is not None:
            grid = TestPointGrid(tuple(spec.test_points), includes_truth=False)
        else:
            grid = TestPointGrid.spaced(theta, spec.n, spec.spacing)
        points = list(grid.points)
        if spec.kind == "barankin":
            cs = barankin_constraints(model, grid, theta)
        else:
            cs = ecrb_constraints(model, grid, theta)
    res = constrained_bound(model, cs, theta, tol)
    record = {"family": model.family, "kind": spec.kind, "theta": theta, "test_points": points}
    record.update(res.to_dict())
    return record


def run_quantum_check(config: RunConfig) -> list[dict]:
    """Coherent-state QFI against the closed form, the Poisson Fisher information
    and the eps -> 0 limit of the regularized quantum eCRB matrix."""
    thetas = QUANTUM_THETAS if config.thetas is None else tuple(config.thetas)
    tol = config.tolerances.engine()
    rows = []
    for theta in sorted(thetas):
        fq = qfi_pure(coherent_state(theta, config.truncation))
        closed = -1.0 / (theta**2 * math.log(theta))
        classical = poisson_model(theta, 1).fisher_information(theta, tol.tau_supp)
        state = lambda t: coherent_state(t, config.truncation)  # noqa: E731
        q = [
            q_ecrb_matrix(RegularizedPureFamily(state, eps), [theta], theta, tol.tau_rank)[0, 0]
            for eps in REGULARIZATION
        ]
        extrapolated = extrapolate_to_zero(REGULARIZATION, q)
        rows.append({
            "theta": theta,
            "qfi_pure": fq,
            "qfi_closed_form": closed,
            "classical_fisher": classical,
            "rel_err_closed_form": abs(fq / closed - 1.0),
            "rel_err_classical": abs(fq / classical - 1.0),
            "qfi_regularized_extrapolated": extrapolated,
            "rel_err_regularized": abs(extrapolated / fq - 1.0),
        })
    return rows


def extrapolate_to_zero(xs, ys) -> float:
    """Value at x = 0 of the interpolating polynomial through (xs, ys)."""
    coeffs = np.polyfit(np.asarray(xs, dtype=float), np.asarray(ys, dtype=float), len(xs) - 1)
    return float(coeffs[-1])
