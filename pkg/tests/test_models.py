import math

import numpy as np
import pytest
from scipy.stats import binom, poisson

from estbounds.constraints import barankin_constraints
from estbounds.engine import constraint_matrix
from estbounds.errors import BoundsError
from estbounds.models import (
    TAIL_MASS,
    kronecker_model,
    model_from_dict,
    poisson_model,
    poisson_truncation,
    qubit_binomial,
)


def _check_invariants(model, thetas):
    for t in thetas:
        p = model.prob(t)
        dp = model.dprob(t)
        assert np.all(p >= 0)
        assert abs(p.sum() - 1.0) < 1e-12
        assert abs(dp.sum()) < 1e-10
        h = 1e-5
        fd = (model.prob(t + h) - model.prob(t - h)) / (2 * h)
        np.testing.assert_allclose(dp, fd, rtol=1e-6, atol=1e-6 * max(np.abs(dp).max(), 1e-3))


class TestQubitBinomial:
    def test_equator_is_fair(self):
        np.testing.assert_allclose(qubit_binomial(1).prob(math.pi / 2), [0.5, 0.5], atol=1e-15)

    def test_pi_over_4(self):
        p = qubit_binomial(1).prob(math.pi / 4)
        assert p[0] == pytest.approx((1 + math.sqrt(2) / 2) / 2, rel=1e-14)
        assert p[0] == pytest.approx(0.853553, abs=1e-6)

    def test_three_shots_at_pi_over_3(self):
        p = qubit_binomial(3).prob(math.pi / 3)
        assert p[0] == pytest.approx(27 / 64, rel=1e-13)
        np.testing.assert_allclose(p, binom.pmf(np.arange(4), 3, 0.25), rtol=1e-13)

    @pytest.mark.parametrize("m,r", [(1, 1.0), (4, 0.7), (12, 1.0), (30, 0.3)])
    def test_matches_scipy_binomial(self, m, r):
        model = qubit_binomial(m, r)
        for t in np.linspace(0, math.pi, 13):
            q1 = (1 - r * math.cos(t)) / 2
            np.testing.assert_allclose(model.prob(t), binom.pmf(np.arange(m + 1), m, q1), rtol=1e-10, atol=1e-15)

    @pytest.mark.parametrize("m,r", [(1, 1.0), (2, 0.5), (7, 0.9), (20, 1.0)])
    def test_invariants_on_dense_grid(self, m, r):
        _check_invariants(qubit_binomial(m, r), np.linspace(0.05, math.pi - 0.05, 41))

    @pytest.mark.parametrize("r", [0.0, -0.1, 1.2])
    def test_rejects_bad_bloch_length(self, r):
        with pytest.raises(BoundsError):
            qubit_binomial(2, r)

    def test_rejects_theta_outside_domain(self):
        with pytest.raises(BoundsError):
            qubit_binomial(1).prob(4.0)


class TestPoisson:
    def test_unit_mean(self):
        p = poisson_model(math.exp(-1), 1).prob(math.exp(-1))
        np.testing.assert_allclose(p[:3], [math.exp(-1), math.exp(-1), math.exp(-1) / 2], rtol=1e-14)

    @pytest.mark.parametrize("theta", [0.05, 0.1, 0.37, 0.7, 0.99])
    def test_zero_count_probability_is_theta(self, theta):
        assert poisson_model(theta, 1).prob(theta)[0] == pytest.approx(theta, rel=1e-14)

    def test_two_draws(self):
        assert poisson_model(0.5, 2).prob(0.5)[0] == pytest.approx(0.25, rel=1e-14)

    def test_theta_one_is_point_mass(self):
        p = poisson_model(0.1, 3).prob(1.0)
        assert p[0] == 1.0 and not p[1:].any()
        dp = poisson_model(0.1, 3).dprob(1.0)
        assert dp[0] == pytest.approx(3.0) and dp[1] == pytest.approx(-3.0)

    @pytest.mark.parametrize("m", [1, 2, 5, 10, 50])
    def test_matches_scipy(self, m):
        model = poisson_model(0.1, m)
        for t in (0.1, 0.3, 0.7):
            np.testing.assert_allclose(model.prob(t), poisson.pmf(model.outcomes, -m * math.log(t)), rtol=1e-11)

    @pytest.mark.parametrize("m", [1, 3, 10, 50])
    def test_invariants_on_dense_grid(self, m):
        _check_invariants(poisson_model(0.05, m), np.linspace(0.06, 0.98, 31))

    @pytest.mark.parametrize("m,theta_min", [(1, 0.1), (10, 0.1), (50, 0.05), (200, 0.1), (5, 1e-3)])
    def test_truncated_tail(self, m, theta_min):
        s_max = poisson_truncation(m, theta_min)
        for t in np.linspace(theta_min, 0.999, 20):
            assert poisson.sf(s_max, -m * math.log(t)) < TAIL_MASS

    @pytest.mark.parametrize("theta", [0.0, 1.0, 1.5])
    def test_rejects_bad_anchor(self, theta):
        with pytest.raises(BoundsError):
            poisson_model(theta, 1)

    def test_below_working_range_rejected(self):
        with pytest.raises(BoundsError):
            poisson_model(0.5, 1).prob(0.2)


class TestKronecker:
    def test_delta(self):
        np.testing.assert_array_equal(kronecker_model(3, (0, 1, 2)).prob(1), [0, 1, 0])
        np.testing.assert_array_equal(kronecker_model(2, (0, 1)).prob(0), [1, 0])

    def test_single_point_support(self):
        model = kronecker_model(5)
        assert np.count_nonzero(model.prob(model.grid[4])) == 1
        assert not model.dprob(model.grid[4]).any()

    def test_off_grid_rejected(self):
        with pytest.raises(BoundsError):
            kronecker_model(3).prob(0.5)

    def test_grid_must_increase(self):
        with pytest.raises(BoundsError):
            kronecker_model(3, (0, 2, 1))


@pytest.mark.parametrize(
    "model",
    [qubit_binomial(4, 0.8), poisson_model(0.2, 3), kronecker_model(4, (0, 0.5, 1, 2))],
    ids=["qubit", "poisson", "kronecker"],
)
def test_json_roundtrip(model):
    clone = model_from_dict(model.to_dict())
    assert clone.to_dict() == model.to_dict()
    t = model.domain[0] if model.family != "poisson" else 0.3
    np.testing.assert_array_equal(clone.prob(t), model.prob(t))


@pytest.mark.parametrize("m", range(1, 7))
def test_iid_power_identity(m):
    # compound binomial matrix equals the elementwise m-th power of the single-shot one
    theta = math.pi / 4
    points = [theta, theta + 0.3, theta + 0.9, 2.6]
    single = constraint_matrix(qubit_binomial(1), barankin_constraints(qubit_binomial(1), points, theta)).matrix
    model = qubit_binomial(m)
    C = constraint_matrix(model, barankin_constraints(model, points, theta)).matrix
    np.testing.assert_allclose(C, single**m, rtol=1e-10)
