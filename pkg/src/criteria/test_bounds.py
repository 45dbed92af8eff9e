"""Rate bound and empirical constants."""

import numpy as np
import pytest

from src.config import settings
from src.criteria import (BoundConstants, direct_mc, empirical_bound_constants,
                          rate_bound, term_bounds)
from src.curvature import dense_subspace
from src.errors import InvalidArgumentError
from src.loss_family import QuadraticFamily, QuadraticFamilySpec
from src.numerics.linalg import spectral_norm


class TestRateBound:
    """Test suite for rate_bound and term_bounds"""

    def test_unit_constants(self):
        """M = 1, sigma = 1, D = 1, k = 1 gives (12 + 3 + 9) / 4 = 6"""
        constants = BoundConstants(M_l=1.0, M_g=1.0, M_H=1.0)
        assert rate_bound(constants, 1.0, 1, 1) == 6.0

    def test_zero_constants(self):
        """All constants 0 give 0"""
        assert rate_bound(BoundConstants(M_l=0.0, M_g=0.0, M_H=0.0), 0.3, 4, 9) == 0.0

    def test_k_must_be_positive(self):
        """k = 0 is rejected"""
        with pytest.raises(InvalidArgumentError):
            rate_bound(BoundConstants(M_l=1.0, M_g=1.0, M_H=1.0), 1.0, 1, 0)

    def test_terms_sum_to_bound(self):
        """3 (value^2 + linear + quadratic / 4) is the rate bound"""
        constants = BoundConstants(M_l=0.7, M_g=2.5, M_H=11.0)
        terms = term_bounds(constants, 0.01, 5, 12)
        recombined = 3.0 * (
            terms.value_bound**2 + terms.linear_bound + terms.quadratic_bound / 4.0
        )
        assert recombined == pytest.approx(terms.total, rel=1e-12)
        assert terms.total == rate_bound(constants, 0.01, 5, 12)

    def test_negative_constant_rejected(self):
        """Constants are non-negative"""
        with pytest.raises(ValueError):
            BoundConstants(M_l=-1.0, M_g=0.0, M_H=0.0)


# ============================================================================
# Empirical constants
# ============================================================================


class TestEmpiricalConstants:
    """Test suite for empirical_bound_constants"""

    def setup_method(self):
        """Setup for each test"""
        self.spec = QuadraticFamilySpec(dimension=32, max_samples=65, d_true=4, seed=51)
        self.family = QuadraticFamily.from_spec(self.spec)

    def test_one_d_hand_example(self):
        """q = (1, 3), w* = 0, m = (0, 0): M_l = 0, M_g = 0, M_H = 3"""
        family = QuadraticFamily.from_arrays([[0.0], [0.0]], [[[1.0]], [[3.0]]])
        constants = empirical_bound_constants(family, 1, np.array([0.0]))
        assert constants.M_l == 0.0 and constants.M_g == 0.0
        assert constants.M_H == pytest.approx(3.0, rel=1e-14)

    def test_identical_samples(self):
        """Identical samples reduce the constants to sample 1"""
        family = QuadraticFamily.from_spec(
            QuadraticFamilySpec(dimension=10, max_samples=6, identical_samples=True, seed=2)
        )
        w = family.minimize(3)
        constants = empirical_bound_constants(family, 3, w)
        assert constants.M_l == pytest.approx(abs(family.per_sample_loss(1, w)), rel=1e-14)
        assert constants.M_g == pytest.approx(
            float(np.linalg.norm(family.sample_gradient(1, w))), abs=1e-14
        )
        assert constants.M_H == pytest.approx(
            spectral_norm(family.curvature(1).to_dense()), rel=1e-12
        )

    def test_power_iteration_path(self, monkeypatch):
        """Above the dense limit M_H comes from power iteration and agrees"""
        w = self.family.minimize(8)
        dense = empirical_bound_constants(self.family, 8, w)
        monkeypatch.setattr(settings, "MAX_DENSE_DIM", 16)
        iterated = empirical_bound_constants(self.family, 8, w, iters=200)
        assert iterated.M_H == pytest.approx(dense.M_H, rel=1e-6)
        assert iterated.M_l == dense.M_l and iterated.M_g == dense.M_g

    def test_curvature_constant_stable_across_k(self):
        """M_H drifts by at most 5% over k = 8..64"""
        values = [
            empirical_bound_constants(self.family, k, self.family.minimize(k)).M_H
            for k in (8, 16, 32, 64)
        ]
        assert max(values) <= 1.05 * min(values)

    @pytest.mark.parametrize("k", [4, 16])
    def test_direct_mc_below_bound(self, k):
        """The subspace criterion stays under the rate bound"""
        w = self.family.minimize(k)
        constants = empirical_bound_constants(self.family, k, w)
        hessian = self.family.dense_hessian_oracle(k, w)
        for d in (1, 4):
            basis = dense_subspace(hessian, d)
            for sigma in (1e-3, 1e-2):
                estimate = direct_mc(self.family, k, w, basis, sigma, samples=2048)
                assert estimate.value <= rate_bound(constants, sigma, d, k)
