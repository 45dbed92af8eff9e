"""
Quadratic family tests

Hand-computed 1-D examples plus the exact identities (gradient, HVP, Taylor,
increment) that hold without approximation for quadratic losses.
"""

import numpy as np
import pytest

from src.config import settings
from src.errors import FactorizationError, InvalidArgumentError
from src.loss_family.base import LossFamily
from src.loss_family.quadratic import QuadraticFamily
from src.loss_family.specs import QuadraticFamilySpec
from src.numerics.linalg import dense_sym_eigh
from src.numerics.rng import RngStream


def one_d(centers, curvatures=None, offsets=None) -> QuadraticFamily:
    curvatures = curvatures or [1.0] * len(centers)
    return QuadraticFamily.from_arrays(
        [[c] for c in centers], [[[q]] for q in curvatures], offsets
    )


class TestQuadraticHandExamples:
    """Test suite for the 1-D examples computed by hand"""

    def test_per_sample_loss(self):
        """m1 = 0, Q1 = 1, b1 = 0, w = 2 gives 1/2 * 2^2 = 2"""
        family = one_d([0.0, 1.0])
        assert family.per_sample_loss(1, np.array([2.0])) == 2.0

    def test_loss_at_center_is_offset(self):
        """l_i(m_i) = b_i"""
        family = one_d([0.0, 3.0], offsets=[0.5, -1.25])
        assert family.per_sample_loss(2, np.array([3.0])) == -1.25

    def test_empirical_risk(self):
        """m = (0, 2), k = 2, w = 0 gives (0 + 2) / 2 = 1"""
        family = one_d([0.0, 2.0])
        assert family.empirical_risk(2, np.array([0.0])) == pytest.approx(1.0, rel=1e-12)
        assert family.empirical_risk(1, np.array([0.0])) == family.per_sample_loss(
            1, np.array([0.0])
        )

    def test_gradient(self):
        """m = (0, 2), k = 2, w = 0 gives (0 - 2) / 2 = -1"""
        family = one_d([0.0, 2.0])
        np.testing.assert_allclose(family.gradient(2, np.array([0.0])), [-1.0])

    def test_hvp(self):
        """Q1 = diag(3, 1), v = e1 gives (3, 0)"""
        family = QuadraticFamily.from_arrays(
            [[0.0, 0.0], [1.0, 1.0]], [np.diag([3.0, 1.0]), np.eye(2)]
        )
        np.testing.assert_array_equal(
            family.hvp(1, np.zeros(2), np.array([1.0, 0.0])), [3.0, 0.0]
        )

    def test_increment_k1(self):
        """m = (0, 2), k = 1, w = 0 gives (2 - 0) / 2 = 1"""
        family = one_d([0.0, 2.0])
        assert family.increment(1, np.array([0.0])) == pytest.approx(1.0, rel=1e-12)

    def test_increment_k2(self):
        """m = (0, 2, 1), k = 2, w = 1 gives (0 - 0.5) / 3 = -1/6"""
        family = one_d([0.0, 2.0, 1.0])
        assert family.increment(2, np.array([1.0])) == pytest.approx(-1.0 / 6.0, rel=1e-12)

    def test_minimize_mean_of_centers(self):
        """m = (0, 2), k = 2 has minimizer w* = 1"""
        family = one_d([0.0, 2.0])
        w_star = family.minimize(2)
        np.testing.assert_allclose(w_star.w, [1.0], rtol=1e-14)
        assert w_star.provenance.kind == "minimizer"
        assert w_star.provenance.k == 2
        assert w_star.achieved_grad_norm <= 1e-10

    def test_minimize_identity_curvatures(self):
        """All Q_i = I gives the mean of the centers"""
        centers = RngStream(5).generator().standard_normal((6, 4))
        family = QuadraticFamily.from_arrays(centers, [np.eye(4)] * 6)
        np.testing.assert_allclose(family.minimize(6).w, centers.mean(axis=0), atol=1e-12)

    def test_singular_curvature_fails(self):
        """A zero mean curvature cannot be factorized"""
        family = one_d([0.0, 1.0], curvatures=[0.0, 0.0])
        with pytest.raises(FactorizationError, match="pivot 0"):
            family.minimize(1)

    # ========================================================================
    # Argument checks
    # ========================================================================

    def test_sample_index_out_of_range(self):
        """Sample indices are 1-based and bounded by max_samples"""
        family = one_d([0.0, 2.0])
        with pytest.raises(InvalidArgumentError, match="out of range"):
            family.per_sample_loss(0, np.array([0.0]))
        with pytest.raises(InvalidArgumentError, match="out of range"):
            family.per_sample_loss(3, np.array([0.0]))

    def test_increment_needs_next_sample(self):
        """increment(k) needs sample k + 1"""
        family = one_d([0.0, 2.0])
        with pytest.raises(InvalidArgumentError, match="out of range"):
            family.increment(2, np.array([0.0]))

    def test_zero_direction_rejected(self):
        """hvp with v = 0 is an invalid argument"""
        family = one_d([0.0, 2.0])
        with pytest.raises(InvalidArgumentError, match="non-zero"):
            family.hvp(1, np.array([0.0]), np.array([0.0]))

    def test_non_positive_tol_rejected(self):
        """minimize requires tol > 0"""
        family = one_d([0.0, 2.0])
        with pytest.raises(InvalidArgumentError, match="tol"):
            family.minimize(2, tol=0.0)


class TestQuadraticEnsemble:
    """Test suite for families drawn from a QuadraticFamilySpec"""

    def setup_method(self):
        """Setup for each test"""
        self.spec = QuadraticFamilySpec(dimension=16, max_samples=20, d_true=3, seed=7)
        self.family = QuadraticFamily.from_spec(self.spec)
        self.generator = RngStream(99).generator()

    def test_curvatures_psd(self):
        """Every Q_i is PSD under the dense oracle"""
        for i in range(1, self.family.max_samples + 1):
            eigenvalues, _ = dense_sym_eigh(self.family.curvature(i).to_dense())
            assert eigenvalues[-1] >= -1e-10 * abs(eigenvalues[0])

    def test_top_heavy_spectrum(self):
        """d_true eigenvalues in the top band, the rest in the tail"""
        eigenvalues, _ = dense_sym_eigh(self.family.curvature(1).to_dense())
        top = eigenvalues[: self.spec.d_true]
        assert np.all(top >= self.spec.top_min * (1 - self.spec.top_jitter) - 1e-9)
        upper = self.spec.top_max * (1 + self.spec.top_jitter) + self.spec.tail_max
        assert np.all(top <= upper + self.spec.ridge + 1e-9)
        assert np.all(eigenvalues[self.spec.d_true :] <= self.spec.tail_max + self.spec.ridge + 1e-9)

    def test_same_spec_same_family(self):
        """Construction is deterministic in the spec"""
        other = QuadraticFamily.from_spec(self.spec)
        w = self.generator.standard_normal(16)
        assert other.empirical_risk(20, w) == self.family.empirical_risk(20, w)

    def test_increment_identity(self):
        """Increment identity agrees with L_{k+1} - L_k on 100 random (w, k)"""
        for _ in range(100):
            k = int(self.generator.integers(1, 20))
            w = self.generator.standard_normal(16)
            direct = self.family.empirical_risk(k + 1, w) - self.family.empirical_risk(k, w)
            identity = self.family.increment(k, w)
            assert abs(direct - identity) <= 1e-12 * (1 + abs(self.family.empirical_risk(k, w)))

    def test_batch_increments_match(self):
        """increments over a batch matches increment row by row"""
        points = self.generator.standard_normal((5, 16))
        batch = self.family.increments(4, points)
        for row, value in zip(points, batch):
            assert value == pytest.approx(self.family.increment(4, row), rel=1e-10, abs=1e-12)

    def test_gradient_finite_differences(self):
        """Exact gradient agrees with central differences (exact for quadratics)"""
        w = self.generator.standard_normal(16)
        grad = self.family.gradient(10, w)
        h = 1e-2
        numeric = np.array(
            [
                (
                    self.family.empirical_risk(10, w + h * e)
                    - self.family.empirical_risk(10, w - h * e)
                )
                / (2 * h)
                for e in np.eye(16)
            ]
        )
        np.testing.assert_allclose(grad, numeric, rtol=1e-10, atol=1e-10)

    def test_hvp_matches_dense_oracle(self):
        """hvp equals the dense oracle product to 1e-12"""
        w = self.generator.standard_normal(16)
        v = self.generator.standard_normal(16)
        dense = self.family.dense_hessian_oracle(10, w)
        product = self.family.hvp(10, w, v)
        assert np.linalg.norm(product - dense @ v) <= 1e-12 * np.linalg.norm(dense @ v)

    def test_dense_oracle_is_mean_curvature(self):
        """The oracle is exactly (1/k) sum Q_i and symmetric"""
        dense = self.family.dense_hessian_oracle(5, np.zeros(16))
        expected = sum(self.family.curvature(i).to_dense() for i in range(1, 6)) / 5
        np.testing.assert_allclose(dense, expected, rtol=1e-14, atol=1e-13)
        assert np.array_equal(dense, dense.T)

    def test_hvp_linearity(self):
        """hvp(alpha v) = alpha hvp(v)"""
        w = self.generator.standard_normal(16)
        v = self.generator.standard_normal(16)
        np.testing.assert_allclose(
            self.family.hvp(8, w, 3.5 * v), 3.5 * self.family.hvp(8, w, v), rtol=1e-12
        )

    def test_taylor_exact(self):
        """The second-order model equals the true change for quadratics"""
        w0 = self.family.minimize(10).w
        delta = 0.1 * self.generator.standard_normal(16)
        taylor = self.family.taylor_increment(10, w0, delta)
        # subtraction path from the base class
        true_change = LossFamily.loss_difference(self.family, 10, w0, delta)
        assert taylor == pytest.approx(true_change, rel=1e-10)
        assert self.family.loss_difference(10, w0, delta) == pytest.approx(taylor, rel=1e-10)

    def test_loss_difference_matches_per_sample_losses(self):
        """The residual form agrees with per-sample losses away from the minimizer"""
        w0 = self.generator.standard_normal(16)
        delta = self.generator.standard_normal(16)
        expected = np.mean(
            [
                self.family.per_sample_loss(i, w0 + delta) - self.family.per_sample_loss(i, w0)
                for i in range(1, 11)
            ]
        )
        assert self.family.loss_difference(10, w0, delta) == pytest.approx(expected, rel=1e-9)

    def test_loss_difference_independent_of_gradient_kernel(self, monkeypatch):
        """A broken gradient shows up in the Taylor model but not the true change"""
        w0 = self.generator.standard_normal(16)
        delta = 0.1 * self.generator.standard_normal(16)
        before = self.family.loss_difference(10, w0, delta)
        monkeypatch.setattr(self.family, "_gradient", lambda w, start, stop: np.zeros(16))
        assert self.family.loss_difference(10, w0, delta) == before
        assert self.family.taylor_increment(10, w0, delta) != pytest.approx(before, rel=1e-6)

    def test_taylor_zero_step(self):
        """delta = 0 gives 0"""
        w = self.generator.standard_normal(16)
        assert self.family.taylor_increment(10, w, np.zeros(16)) == 0.0

    def test_minimizer_stationary(self):
        """Exact minimizer reaches ||g|| <= 1e-10"""
        for k in (1, 5, 19):
            w_star = self.family.minimize(k)
            assert w_star.achieved_grad_norm <= 1e-10
            assert w_star.provenance.converged

    def test_woodbury_matches_dense(self, monkeypatch):
        """The factored solver agrees with the dense solve"""
        dense_solution = self.family.minimize(12).w
        monkeypatch.setattr(settings, "MAX_DENSE_DIM", 8)
        factored = self.family.minimize(12)
        np.testing.assert_allclose(factored.w, dense_solution, rtol=1e-8, atol=1e-8)
        assert factored.achieved_grad_norm <= 1e-9


class TestIdenticalSamples:
    """Test suite for families whose samples all equal sample 1"""

    def setup_method(self):
        """Setup for each test"""
        spec = QuadraticFamilySpec(dimension=8, max_samples=10, identical_samples=True, seed=3)
        self.family = QuadraticFamily.from_spec(spec)
        self.w = RngStream(4).generator().standard_normal(8)

    def test_increment_vanishes(self):
        """Increment is exactly 0 at every w and k"""
        for k in range(1, 10):
            assert self.family.increment(k, self.w) == 0.0

    def test_risk_independent_of_k(self):
        """L_k does not depend on k"""
        first = self.family.empirical_risk(1, self.w)
        for k in range(2, 11):
            assert self.family.empirical_risk(k, self.w) == pytest.approx(first, rel=1e-14)

    def test_batch_increments_vanish(self):
        """Batched increments are exactly 0"""
        points = RngStream(5).generator().standard_normal((4, 8))
        assert np.all(self.family.increments(3, points) == 0.0)


class TestOffsetLaws:
    """Test suite for the offset laws"""

    def test_alternating_offsets(self):
        """alternating gives b_i = (-1)^i * offset_scale"""
        spec = QuadraticFamilySpec(
            dimension=4, max_samples=4, d_true=1, offset_law="alternating", offset_scale=2.0
        )
        family = QuadraticFamily.from_spec(spec)
        assert [family.offset(i) for i in range(1, 5)] == [-2.0, 2.0, -2.0, 2.0]

    def test_isotropic_curvature(self):
        """isotropic gives Q_i = s_i I"""
        spec = QuadraticFamilySpec(dimension=5, max_samples=3, spectrum="isotropic")
        family = QuadraticFamily.from_spec(spec)
        dense = family.curvature(2).to_dense()
        np.testing.assert_allclose(dense, dense[0, 0] * np.eye(5))
