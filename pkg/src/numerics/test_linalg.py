"""
Dense linear algebra tests

The eigendecomposition and SPD solve act as oracles for the matrix-free
code, so their contracts are checked directly here.
"""

import numpy as np
import pytest

from src.errors import FactorizationError, InvalidArgumentError, SizeLimitError
from src.numerics.linalg import (as_sym_matrix, dense_sym_eigh,
                                 gaussian_quartic_moment, orthonormality_error,
                                 solve_spd)
from src.numerics.rng import RngStream, sample_std_normal_matrix


def random_symmetric(n: int, seed: int) -> np.ndarray:
    g = sample_std_normal_matrix(RngStream(seed), n, n)
    return 0.5 * (g + g.T)


class TestSymMatrix:
    """Test suite for symmetrization at construction"""

    def test_exact_symmetry(self):
        """Construction output equals its transpose bit for bit"""
        m = sample_std_normal_matrix(RngStream(3), 7, 7)
        sym = as_sym_matrix(m)
        assert np.array_equal(sym, sym.T)

    def test_non_finite_rejected(self):
        """NaN entries are an invalid argument"""
        with pytest.raises(InvalidArgumentError, match="non-finite"):
            as_sym_matrix([[1.0, np.nan], [0.0, 1.0]])


class TestDenseSymEigh:
    """Test suite for dense_sym_eigh"""

    def test_diagonal(self):
        """diag(5, 1) gives (5, 1) with u1 = +-e1"""
        eigenvalues, vectors = dense_sym_eigh(np.diag([5.0, 1.0]))
        np.testing.assert_allclose(eigenvalues, [5.0, 1.0])
        assert abs(abs(vectors[0, 0]) - 1.0) < 1e-12

    def test_identity_reconstruction(self):
        """Identity reconstructs to 1e-12"""
        eigenvalues, vectors = dense_sym_eigh(np.eye(4))
        np.testing.assert_allclose(eigenvalues, np.ones(4))
        rebuilt = vectors @ np.diag(eigenvalues) @ vectors.T
        assert np.linalg.norm(rebuilt - np.eye(4)) <= 1e-12

    def test_random_reconstruction(self):
        """Random symmetric N=50 reconstructs to 1e-8 relative"""
        m = random_symmetric(50, seed=11)
        eigenvalues, vectors = dense_sym_eigh(m)
        rebuilt = vectors @ np.diag(eigenvalues) @ vectors.T
        assert np.linalg.norm(rebuilt - m) <= 1e-8 * np.linalg.norm(m)

    def test_descending_algebraic_order(self):
        """Eigenvalues come back sorted by algebraic value"""
        eigenvalues, _ = dense_sym_eigh(np.diag([3.0, -5.0, 1.0]))
        np.testing.assert_allclose(eigenvalues, [3.0, 1.0, -5.0])

    def test_residual_contract_over_draws(self):
        """Residual and orthonormality hold over 50 random matrices"""
        for draw in range(50):
            n = 5 + (draw * 7) % 96
            m = random_symmetric(n, seed=100 + draw)
            eigenvalues, vectors = dense_sym_eigh(m)
            norm2 = np.max(np.abs(eigenvalues))
            residuals = np.linalg.norm(m @ vectors - vectors * eigenvalues, axis=0)
            assert residuals.max() <= 1e-8 * (1.0 + norm2)
            assert orthonormality_error(vectors) <= 1e-8

    def test_size_limit(self):
        """N > 512 is refused"""
        with pytest.raises(SizeLimitError, match="N <= 512"):
            dense_sym_eigh(np.eye(513))


class TestSolveSpd:
    """Test suite for solve_spd"""

    def test_identity(self):
        """(I, b) returns b"""
        b = np.array([1.0, -2.0, 3.0])
        np.testing.assert_allclose(solve_spd(np.eye(3), b), b)

    def test_diagonal(self):
        """diag(2, 4) x = (2, 8) gives (1, 2)"""
        np.testing.assert_allclose(
            solve_spd(np.diag([2.0, 4.0]), np.array([2.0, 8.0])), [1.0, 2.0]
        )

    def test_random_spd_residual(self):
        """Random SPD N=30 meets the residual contract"""
        g = sample_std_normal_matrix(RngStream(5), 30, 30)
        m = g @ g.T + 30.0 * np.eye(30)
        b = sample_std_normal_matrix(RngStream(6), 1, 30)[0]
        x = solve_spd(m, b)
        bound = 1e-10 * (np.linalg.norm(m) * np.linalg.norm(x) + np.linalg.norm(b))
        assert np.linalg.norm(m @ x - b) <= bound

    def test_non_pd_names_pivot(self):
        """A negative pivot raises with its index"""
        with pytest.raises(FactorizationError, match="pivot 1") as excinfo:
            solve_spd(np.diag([1.0, -1.0, 2.0]), np.ones(3))
        assert excinfo.value.pivot == 1


class TestGaussianMoments:
    """Monte Carlo check of E[(z^T B z)^2] = 2 s^4 Tr(B^2) + s^4 Tr(B)^2"""

    def test_quartic_moment_identity(self):
        """20 random B, D <= 10, within 5 standard errors"""
        samples = 200_000
        for draw in range(20):
            d = 1 + draw % 10
            sigma = 0.5 + 0.1 * (draw % 4)
            b = random_symmetric(d, seed=500 + draw)
            z = sigma * sample_std_normal_matrix(RngStream(900 + draw), samples, d)
            quad = np.einsum("si,ij,sj->s", z, b, z)
            values = quad**2
            estimate = values.mean()
            std_error = values.std(ddof=1) / np.sqrt(samples)
            expected = gaussian_quartic_moment(b, sigma)
            assert abs(estimate - expected) <= 5.0 * std_error
