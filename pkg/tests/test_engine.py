import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from estbounds.constraints import barankin_constraints, crb_constraint
from estbounds.engine import (
    DIVERGENT,
    FINITE,
    ConstraintSet,
    Tolerances,
    bound_from_estimator,
    constrained_bound,
    constraint_matrix,
    estimator_variance,
    evaluate_bound,
)
from estbounds.errors import BoundsError, DegenerateModelError, NotPSDError
from estbounds.models import kronecker_model, poisson_model, qubit_binomial

QUARTER = math.pi / 4


def min_variance_oracle(model, cs, theta):
    """Directly minimize sum_x p y^2 subject to sum_{X+} g_k y = lam_k (SLSQP)."""
    p = model.prob(theta)
    support = p > 0
    G = cs.g[:, support]
    w = p[support]
    y0 = np.linalg.lstsq(G, cs.lam, rcond=None)[0]
    res = minimize(
        lambda y: float(w @ y**2),
        y0,
        jac=lambda y: 2 * w * y,
        constraints=[{"type": "eq", "fun": lambda y: G @ y - cs.lam, "jac": lambda y: G}],
        method="SLSQP",
        options={"ftol": 1e-14, "maxiter": 500},
    )
    assert res.success, res.message
    return res.fun


class TestConstraintMatrix:
    def test_kronecker_single_point_support(self):
        model = kronecker_model(3, (0.0, 1.0, 2.0))
        cs = barankin_constraints(model, model.grid, model.grid[0])
        cm = constraint_matrix(model, cs)
        expected = np.zeros((3, 3))
        expected[0, 0] = 1.0
        np.testing.assert_array_equal(cm.matrix, expected)
        assert cm.support_warning
        assert cm.support.tolist() == [True, False, False]

    def test_kronecker_barankin_is_divergent(self):
        model = kronecker_model(3, (0.0, 1.0, 2.0))
        res = constrained_bound(model, barankin_constraints(model, model.grid, 0.0))
        assert res.status == DIVERGENT and res.support_warning

    def test_qubit_normalization_entry(self):
        model = qubit_binomial(1)
        cs = barankin_constraints(model, [QUARTER, QUARTER + math.pi / 6], QUARTER)
        C = constraint_matrix(model, cs).matrix
        assert C[0, 0] == pytest.approx(1.0, abs=1e-15)

    def test_poisson_two_points(self):
        model = poisson_model(0.1, 1)
        C = constraint_matrix(model, barankin_constraints(model, [0.1, 1.0], 0.1)).matrix
        np.testing.assert_allclose(C, [[1, 1], [1, 10]], rtol=1e-12)

    def test_symmetric(self):
        model = qubit_binomial(5, 0.9)
        cs = barankin_constraints(model, np.linspace(0.4, 2.8, 6), 0.4)
        C = constraint_matrix(model, cs).matrix
        assert np.array_equal(C, C.T)

    def test_outcome_space_mismatch(self):
        cs = barankin_constraints(qubit_binomial(2), [1.0, 1.5], 1.0)
        with pytest.raises(BoundsError):
            constraint_matrix(qubit_binomial(3), cs)

    def test_degenerate_model(self):
        model = qubit_binomial(1)
        cs = barankin_constraints(model, [1.0], 1.0)
        with pytest.raises(DegenerateModelError):
            constraint_matrix(model, cs, 1.0, tau_supp=1.0)

    @pytest.mark.parametrize("m,n", [(1, 3), (2, 5), (3, 6), (5, 4), (8, 8)])
    def test_rank_bounded_by_outcomes(self, m, n):
        model = qubit_binomial(m)
        cs = barankin_constraints(model, np.linspace(0.3, 2.9, n), 0.3)
        res = constrained_bound(model, cs)
        assert res.rank <= min(n, m + 1)


class TestEvaluateBound:
    def test_zero_bias(self):
        res = evaluate_bound(np.array([[1.0, 1.0], [1.0, 3.0]]), [0.0, 0.0])
        assert res.status == FINITE and res.value == 0.0

    def test_poisson_hand_inverse(self):
        res = evaluate_bound(np.array([[1.0, 1.0], [1.0, 10.0]]), [0.0, 0.9])
        assert res.value == pytest.approx(0.81 / 9, rel=1e-13)
        assert res.value == pytest.approx(0.1 * 0.9, rel=1e-13)

    def test_qubit_three_points_diverge(self):
        model = qubit_binomial(1)
        pts = QUARTER + np.arange(3) * math.pi / 6
        res = constrained_bound(model, barankin_constraints(model, pts, QUARTER))
        assert res.status == DIVERGENT
        assert res.rank == 2
        assert res.kernel_projection_norm > 0

    def test_divergence_matches_reported_diagnostics(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            A = rng.normal(size=(4, rng.integers(1, 6)))
            C = A @ A.T
            lam = rng.normal(size=4)
            res = evaluate_bound(C, lam)
            diverges = res.kernel_projection_norm > Tolerances().tau_div * res.lambda_norm
            assert (res.status == DIVERGENT) == diverges

    def test_rank_deficient_but_in_range(self):
        A = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        C = A @ A.T
        lam = A @ np.array([0.3, -0.2])
        res = evaluate_bound(C, lam)
        assert res.status == FINITE and res.rank == 2
        assert res.value == pytest.approx(lam @ np.linalg.pinv(C) @ lam, rel=1e-10)

    def test_zero_fisher_information_diverges(self):
        res = evaluate_bound(np.zeros((1, 1)), [1.0])
        assert res.status == DIVERGENT and res.rank == 0

    def test_not_square(self):
        with pytest.raises(BoundsError):
            evaluate_bound(np.ones((2, 3)), [1.0, 1.0])

    def test_asymmetric(self):
        with pytest.raises(BoundsError):
            evaluate_bound(np.array([[1.0, 0.5], [0.0, 1.0]]), [1.0, 1.0])

    def test_not_psd(self):
        with pytest.raises(NotPSDError):
            evaluate_bound(np.array([[1.0, 2.0], [2.0, 1.0]]), [1.0, 0.0])

    def test_sup_definition(self):
        # no direction a beats the reported supremum and a* = C^-1 lam attains it
        rng = np.random.default_rng(0)
        model = qubit_binomial(4, 0.9)
        cs = barankin_constraints(model, [0.7, 1.0, 1.6, 2.2], 0.7)
        C = constraint_matrix(model, cs).matrix
        value = evaluate_bound(C, cs.lam).value
        a = rng.normal(size=(20000, 4))
        ratios = (a @ cs.lam) ** 2 / np.einsum("ij,jk,ik->i", a, C, a)
        assert ratios.max() <= value * (1 + 1e-12)
        best = np.linalg.solve(C, cs.lam)
        assert (best @ cs.lam) ** 2 / (best @ C @ best) == pytest.approx(value, rel=1e-9)

    @pytest.mark.parametrize(
        "model,points,theta",
        [
            (qubit_binomial(2), [QUARTER, 1.2, 2.0], QUARTER),
            (qubit_binomial(5, 0.8), [0.9, 1.3, 1.8, 2.5], 0.9),
            (poisson_model(0.2, 2), [0.2, 0.35, 0.6], 0.2),
        ],
    )
    def test_matches_direct_minimization(self, model, points, theta):
        cs = barankin_constraints(model, points, theta)
        assert constrained_bound(model, cs).value == pytest.approx(
            min_variance_oracle(model, cs, theta), rel=1e-6
        )


@settings(max_examples=60, deadline=None)
@given(
    m=st.integers(1, 8),
    extra=st.lists(st.floats(0.2, 3.0), min_size=1, max_size=4, unique=True),
    k=st.integers(0, 4),
    c=st.one_of(st.floats(0.01, 100.0), st.floats(-100.0, -0.01)),
)
def test_rescaling_a_constraint_is_invisible(m, extra, k, c):
    theta = 0.5
    model = qubit_binomial(m, 0.95)
    pts = sorted({theta, *extra})
    cs = barankin_constraints(model, pts, theta)
    k = k % len(cs)
    g, lam = cs.g.copy(), cs.lam.copy()
    g[k] *= c
    lam[k] *= c
    scaled = ConstraintSet(g, lam, "custom", theta)
    a, b = constrained_bound(model, cs), constrained_bound(model, scaled)
    assert a.status == b.status
    if a.finite:
        # rounding in c * g is amplified by the conditioning of C
        rel = 1e-10 if a.condition_number < 1e4 else 1e-14 * a.condition_number
        assert b.value == pytest.approx(a.value, rel=rel, abs=1e-300)


@settings(max_examples=60, deadline=None)
@given(
    m=st.integers(1, 10),
    pts=st.lists(st.floats(0.1, 3.0), min_size=1, max_size=5, unique=True),
    new=st.floats(0.1, 3.0),
)
def test_appending_a_constraint_never_loosens(m, pts, new):
    theta = 0.8
    model = qubit_binomial(m, 0.9)
    base = barankin_constraints(model, sorted({theta, *pts}), theta)
    more = base.extend(crb_constraint(model, new))
    a, b = constrained_bound(model, base), constrained_bound(model, more)
    if a.finite and b.finite:
        assert b.value >= a.value * (1 - 1e-9)


class TestEstimatorVariance:
    def test_constant(self):
        assert estimator_variance(qubit_binomial(3), [2.0] * 4, 1.0) == pytest.approx(0.0, abs=1e-28)

    def test_bernoulli(self):
        p0 = (1 + math.sqrt(2) / 2) / 2
        v = estimator_variance(qubit_binomial(1), [1.0, 0.0], QUARTER)
        assert v == pytest.approx(p0 * (1 - p0), rel=1e-14)
        assert v == pytest.approx(0.125, rel=1e-12)

    def test_kronecker_deterministic(self):
        model = kronecker_model(4, (0.0, 0.3, 0.7, 1.0))
        assert estimator_variance(model, lambda x: np.asarray(model.grid)[x], 0.7) == 0.0

    def test_shape_mismatch(self):
        with pytest.raises(BoundsError):
            estimator_variance(qubit_binomial(2), [0.0, 1.0], 1.0)


class TestBoundFromEstimator:
    def test_single_point(self):
        lam, res, var = bound_from_estimator(qubit_binomial(3), [0.1, 0.5, 1.0, 2.0], [1.1], 1.1)
        np.testing.assert_allclose(lam, [0.0], atol=1e-15)
        assert res.value == pytest.approx(0.0, abs=1e-28) and var > 0.1

    def test_more_points_than_outcomes_is_finite(self):
        pts = QUARTER + np.arange(3) * math.pi / 6
        lam, res, var = bound_from_estimator(qubit_binomial(1), [1.0, 0.0], pts, QUARTER)
        assert res.status == FINITE
        assert res.value <= var + 1e-15
        assert var == pytest.approx(0.125, rel=1e-12)

    def test_two_shots(self):
        model = qubit_binomial(2)
        lam, res, var = bound_from_estimator(model, lambda k: k / 2, [QUARTER, math.pi / 2], QUARTER)
        assert res.status == FINITE
        assert res.value <= var
        assert var == pytest.approx(estimator_variance(model, lambda k: k / 2, QUARTER))


@pytest.mark.parametrize(
    "model,theta,theta_prime",
    [
        (qubit_binomial(3), 1.0, 1.7),
        (qubit_binomial(12, 0.7), 2.0, 0.4),
        (poisson_model(0.3, 4), 0.3, 0.55),
        (poisson_model(0.1, 1), 0.1, 1.0),
    ],
)
def test_two_points_reduce_to_hcr_quotient(model, theta, theta_prime):
    C22 = float(np.sum(model.prob(theta_prime) ** 2 / model.prob(theta)))
    expected = (theta_prime - theta) ** 2 / (C22 - 1)
    cs = barankin_constraints(model, sorted([theta, theta_prime]), theta)
    assert constrained_bound(model, cs).value == pytest.approx(expected, rel=1e-10)
