"""Gaussian joint-tail engine: closed forms, limits, and invariances."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from aoi_lab.errors import EvaluationError, QuadratureError
from aoi_lab.orthant import (
    CovarianceSpec,
    OuChain,
    QuadratureSpec,
    mvn_orthant_mc,
    orthant_frozen,
    orthant_iid,
    ou_covariance,
    ou_orthant,
    std_normal_tail,
)

# Reference joint tails computed independently by conditioning on the
# middle coordinate(s), under which the outer coordinates of an AR(1)
# chain are independent, and integrating adaptively (error < 1e-12).
TRI_ORTHANT_RHO06 = 0.08258524279878547  # a = (0.3, -0.5, 1.1)
QUAD_ORTHANT_RHO03 = 0.02489016702712972  # a = (0.2, 0.4, 0.6, 0.8)


def bivariate_zero_tail(rho: float) -> float:
    """Closed form Pr(Z_0 > 0, Z_1 > 0) = 1/4 + arcsin(rho)/(2*pi)."""
    return 0.25 + math.asin(rho) / (2.0 * math.pi)


class TestStdNormalTail:
    def test_matches_scipy_sf(self):
        x = np.linspace(-8, 8, 101)
        assert np.allclose(std_normal_tail(x), norm.sf(x), rtol=1e-13, atol=0)

    def test_infinite_arguments(self):
        assert std_normal_tail(-np.inf) == 1.0
        assert std_normal_tail(np.inf) == 0.0


class TestQuadratureSpec:
    def test_defaults(self):
        spec = QuadratureSpec()
        assert spec.m == 400 and spec.L == 8.0 and spec.rule == "gauss-legendre"

    @pytest.mark.parametrize(
        "kwargs",
        [{"m": 8}, {"L": 2.0}, {"rule": "simpson"}],
    )
    def test_rejects_bad_parameters(self, kwargs):
        with pytest.raises(ValueError):
            QuadratureSpec(**kwargs)


class TestOuOrthant:
    def test_empty_vector_is_one(self):
        assert ou_orthant([], 0.5) == 1.0

    def test_single_threshold_is_marginal_tail(self):
        for a in (-1.7, 0.0, 2.4):
            assert ou_orthant([a], 0.37) == pytest.approx(
                float(std_normal_tail(a)), abs=1e-14
            )

    @pytest.mark.parametrize("rho", [0.1, 0.3, 0.5, 0.7, 0.9])
    def test_bivariate_zero_thresholds_closed_form(self, rho):
        assert ou_orthant([0.0, 0.0], rho) == pytest.approx(
            bivariate_zero_tail(rho), abs=1e-9
        )

    def test_trivariate_reference(self):
        p = ou_orthant([0.3, -0.5, 1.1], 0.6)
        assert p == pytest.approx(TRI_ORTHANT_RHO06, abs=1e-9)

    def test_quadrivariate_reference(self):
        p = ou_orthant([0.2, 0.4, 0.6, 0.8], 0.3)
        assert p == pytest.approx(QUAD_ORTHANT_RHO03, abs=1e-9)

    def test_minus_infinity_thresholds_are_vacuous(self):
        a = [0.4, 0.9, 1.3]
        base = ou_orthant(a, 0.55)
        padded = ou_orthant([-np.inf] + a + [-np.inf], 0.55)
        assert padded == pytest.approx(base, abs=1e-12)

    def test_rejects_threshold_beyond_truncation(self):
        with pytest.raises(QuadratureError):
            ou_orthant([9.0], 0.5, QuadratureSpec(L=8.0))

    def test_rejects_nan_threshold(self):
        with pytest.raises(ValueError):
            ou_orthant([np.nan], 0.5)

    @pytest.mark.parametrize("rho", [-0.2, 0.0, 1.0, 1.3])
    def test_rejects_rho_outside_open_unit_interval(self, rho):
        with pytest.raises(ValueError):
            OuChain(rho)

    @given(
        a=st.lists(st.floats(-2, 2), min_size=1, max_size=5),
        rho=st.floats(0.05, 0.95),
    )
    @settings(max_examples=40, deadline=None)
    def test_reversal_invariance(self, a, rho):
        # The stationary AR(1) law is invariant under time reversal.
        fwd = ou_orthant(a, rho)
        rev = ou_orthant(a[::-1], rho)
        assert rev == pytest.approx(fwd, abs=5e-9)

    @given(
        a=st.lists(st.floats(-2, 2), min_size=1, max_size=5),
        rho=st.floats(0.05, 0.95),
    )
    @settings(max_examples=40, deadline=None)
    def test_bracketed_by_iid_and_frozen(self, a, rho):
        # Positive correlation only helps a joint tail; full correlation
        # helps the most.
        p = ou_orthant(a, rho)
        assert p >= orthant_iid(a) - 1e-9
        assert p <= orthant_frozen(a) + 1e-9

    def test_extending_never_increases_probability(self):
        chain = OuChain(0.6)
        prev = 1.0
        for a in [-1.0, 0.2, 0.7, -0.3, 1.5]:
            prev_new = chain.extend(a)
            assert prev_new <= prev + 1e-15
            prev = prev_new

    def test_hopeless_threshold_kills_chain(self):
        # A threshold with marginal tail below double precision zeroes the
        # joint probability for good.
        chain = OuChain(0.5, QuadratureSpec(L=40.0))
        chain.extend(0.0)
        assert chain.extend(39.0) == 0.0
        assert chain.extend(0.0) == 0.0


class TestDegenerateLimits:
    def test_iid_product_form(self):
        a = np.array([0.3, -1.0, 1.2])
        assert orthant_iid(a) == pytest.approx(
            float(np.prod(norm.sf(a))), rel=1e-13
        )

    def test_frozen_max_form(self):
        a = np.array([0.3, -1.0, 1.2])
        assert orthant_frozen(a) == pytest.approx(float(norm.sf(1.2)), rel=1e-13)

    def test_near_zero_rho_approaches_iid(self):
        a = [0.5, -0.2, 1.0]
        assert ou_orthant(a, 1e-6) == pytest.approx(orthant_iid(a), abs=1e-4)

    def test_near_unit_rho_approaches_frozen(self):
        a = [0.5, -0.2, 1.0]
        assert ou_orthant(a, 1 - 1e-6) == pytest.approx(orthant_frozen(a), abs=1e-3)


class TestConditionalTail:
    def test_snapshot_is_normalized_and_monotone(self):
        chain = OuChain(0.5)
        chain.extend(0.3)
        chain.extend(-0.4)
        ct = chain.conditional_tail()
        assert ct.tail[0] == pytest.approx(1.0, abs=1e-9)
        assert ct.tail[-1] == pytest.approx(0.0, abs=1e-12)
        assert np.all(np.diff(ct.tail) <= 1e-12)

    def test_requires_at_least_one_stage(self):
        with pytest.raises(EvaluationError):
            OuChain(0.5).conditional_tail()


class TestCovarianceAndMonteCarlo:
    def test_covariance_spec_builds_toeplitz_matrix(self):
        spec = ou_covariance(0.5, 4)
        expected = 0.5 ** np.abs(np.subtract.outer(np.arange(4), np.arange(4)))
        assert np.allclose(spec.matrix, expected, atol=1e-14)

    def test_covariance_spec_rejects_non_unit_diagonal(self):
        with pytest.raises(ValueError):
            CovarianceSpec(times=np.array([0.0, 1.0]), autocov=lambda t: 0.9)

    def test_mc_matches_marginal_tail_univariate(self):
        spec = ou_covariance(0.5, 1)
        p, se = mvn_orthant_mc(spec, [0.8], n_samples=200_000, seed=3)
        assert abs(p - float(norm.sf(0.8))) <= 4 * se

    def test_mc_is_deterministic_in_seed(self):
        spec = ou_covariance(0.7, 3)
        a = [0.1, 0.2, 0.3]
        assert mvn_orthant_mc(spec, a, 50_000, seed=11) == mvn_orthant_mc(
            spec, a, 50_000, seed=11
        )

    def test_mc_cross_checks_exact_engine(self):
        a = [0.2, -0.6, 0.9]
        rho = 0.65
        exact = ou_orthant(a, rho)
        p, se = mvn_orthant_mc(ou_covariance(rho, 3), a, 400_000, seed=5)
        assert abs(exact - p) <= 4 * se

    def test_mc_rejects_wrong_threshold_length(self):
        with pytest.raises(ValueError):
            mvn_orthant_mc(ou_covariance(0.5, 3), [0.0, 0.0], 1000, seed=1)
