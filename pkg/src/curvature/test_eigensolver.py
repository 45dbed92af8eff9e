"""
Eigensolver tests

The deflated power iteration is checked on small diagonal cases, against the
dense oracle on gap-conditioned random matrices, and for its HVP bookkeeping.
"""

import numpy as np
import pytest

from src.curvature import (EigSolverConfig, dense_subspace, family_operator,
                           hvp_call_count, matrix_operator,
                           spectral_norm_estimate, symmetry_defect,
                           top_d_eigenpairs)
from src.errors import ConvergenceError, InvalidArgumentError
from src.loss_family import MlpFamily, MlpFamilySpec, QuadraticFamily, QuadraticFamilySpec
from src.numerics.linalg import (dense_sym_eigh, orthonormality_error,
                                 projector_distance)
from src.numerics.rng import RngStream


def gap_conditioned(n: int, d: int, seed: int) -> np.ndarray:
    """Top d eigenvalues 20, 19, ...; the rest in [-5, top_d - 0.1]."""
    generator = RngStream(seed).generator()
    top = 20.0 - np.arange(d)
    rest = generator.uniform(-5.0, top[-1] - 0.1, n - d)
    basis = np.linalg.qr(generator.standard_normal((n, n)))[0]
    return (basis * np.concatenate([top, rest])) @ basis.T


def solve(matrix, **settings):
    matrix = np.asarray(matrix, dtype=np.float64)
    cfg = EigSolverConfig(**settings)
    return top_d_eigenpairs(matrix_operator(matrix), matrix.shape[0], cfg)


class TestSmallSpectra:
    """Test suite for hand-checkable spectra"""

    def test_diag_two(self):
        """diag(5, 1), D = 1 gives 5 and +-e1"""
        basis = solve(np.diag([5.0, 1.0]), D=1, tol=1e-10)
        assert basis.eigenvalues[0] == pytest.approx(5.0, abs=1e-9)
        assert abs(abs(basis.u[0, 0]) - 1.0) <= 1e-8
        assert basis.residuals[0] <= 1e-8

    def test_diag_three_span(self):
        """diag(5, 4, 1), D = 2 spans {e1, e2}"""
        basis = solve(np.diag([5.0, 4.0, 1.0]), D=2, tol=1e-8)
        np.testing.assert_allclose(basis.eigenvalues, [5.0, 4.0], atol=1e-7)
        assert projector_distance(basis.u, np.eye(3)[:, :2]) <= 1e-6

    def test_algebraic_not_magnitude(self):
        """diag(3, -5, 1), D = 1 returns 3, not -5"""
        basis = solve(np.diag([3.0, -5.0, 1.0]), D=1)
        assert basis.eigenvalues[0] == pytest.approx(3.0, abs=1e-5)

    def test_descending_and_orthonormal(self):
        """Pairs come out descending with orthonormal vectors"""
        basis = solve(np.diag([1.0, 7.0, 3.0, -2.0, 5.0]), D=4, tol=1e-8)
        np.testing.assert_allclose(basis.eigenvalues, [7.0, 5.0, 3.0, 1.0], atol=1e-6)
        assert np.all(np.diff(basis.eigenvalues) <= 0)
        assert orthonormality_error(basis.u) <= 1e-8

    def test_d_larger_than_n(self):
        """D > n is an invalid argument"""
        with pytest.raises(InvalidArgumentError, match="exceeds"):
            solve(np.eye(3), D=4)

    def test_non_convergence_carries_partial_basis(self):
        """A near-degenerate second pair fails with the first pair attached"""
        matrix = np.diag([10.0, 5.0, 4.99, 1.0, 0.5])
        with pytest.raises(ConvergenceError, match="eigenpair 2") as info:
            solve(matrix, D=3, max_iters=100)
        partial = info.value.partial_basis
        assert partial.D == 1 and not partial.certified
        assert partial.eigenvalues[0] == pytest.approx(10.0, abs=1e-5)
        assert len(info.value.residuals) == 2


class TestOracleEquivalence:
    """Test suite comparing against the dense eigendecomposition"""

    @pytest.mark.parametrize("seed", [1, 2, 3])
    def test_gap_conditioned_random(self, seed):
        """N = 80, D = 10, gap 0.1: eigenvalues, projector and orthonormality"""
        matrix = gap_conditioned(80, 10, seed)
        basis = solve(matrix, D=10, tol=1e-8, max_iters=20000, seed=seed)
        values, vectors = dense_sym_eigh(matrix)
        lam1 = abs(values[0])
        np.testing.assert_allclose(basis.eigenvalues, values[:10], atol=1e-6 * (1 + lam1))
        assert projector_distance(basis.u, vectors[:, :10]) <= 1e-4
        assert orthonormality_error(basis.u) <= 1e-8
        assert np.all(basis.residuals <= 1e-8 * (1 + lam1))

    def test_dense_subspace_matches(self):
        """dense_subspace returns the oracle's leading pairs"""
        matrix = gap_conditioned(30, 4, 7)
        basis = dense_subspace(matrix, 4)
        np.testing.assert_allclose(basis.eigenvalues, [20.0, 19.0, 18.0, 17.0], atol=1e-10)
        assert basis.method == "dense"
        assert np.all(basis.residuals <= 1e-8 * 21)

    def test_quadratic_family_hessian(self):
        """Subspace of a family Hessian matches its dense oracle"""
        family = QuadraticFamily.from_spec(
            QuadraticFamilySpec(dimension=24, max_samples=10, d_true=3, seed=4)
        )
        w = family.minimize(8)
        basis = top_d_eigenpairs(family_operator(family, 8, w), 24, EigSolverConfig(D=3, tol=1e-9))
        dense = dense_subspace(family.dense_hessian_oracle(8, w), 3)
        np.testing.assert_allclose(basis.eigenvalues, dense.eigenvalues, atol=1e-7)
        assert projector_distance(basis.u, dense.u) <= 1e-6


class TestBookkeeping:
    """Test suite for HVP call accounting and determinism"""

    def test_count_single_pair(self):
        """D = 1: count = iterations + shift_probes + 1"""
        basis = solve(np.diag([5.0, 1.0]), D=1, shift_probes=20)
        assert hvp_call_count(basis) == basis.iterations_used + 20 + 1

    def test_count_general(self):
        """count = shift_probes + iterations + D"""
        basis = solve(gap_conditioned(40, 4, 5), D=4, shift_probes=7, max_iters=20000)
        assert basis.hvp_calls == 7 + basis.iterations_used + 4

    def test_same_seed_same_count(self):
        """Two runs with one seed agree exactly"""
        matrix = gap_conditioned(40, 3, 6)
        first = solve(matrix, D=3, seed=11, max_iters=20000)
        second = solve(matrix, D=3, seed=11, max_iters=20000)
        assert first.hvp_calls == second.hvp_calls
        assert np.array_equal(first.vectors, second.vectors)

    def test_count_roughly_linear_in_d(self):
        """Calls grow at most linearly in D on a fixed matrix"""
        generator = RngStream(8).generator()
        values = np.concatenate([10.0 - np.arange(5), generator.uniform(-3.0, 3.0, 95)])
        q = np.linalg.qr(generator.standard_normal((100, 100)))[0]
        matrix = (q * values) @ q.T
        probes = 20
        per_pair = solve(matrix, D=1, shift_probes=probes).hvp_calls - probes
        for d in (2, 3, 4):
            calls = solve(matrix, D=d, shift_probes=probes).hvp_calls - probes
            assert calls <= 3 * d * per_pair


class TestOperatorChecks:
    """Test suite for the symmetry and norm probes"""

    def test_symmetric_matrix_passes(self):
        """A symmetric operator has defect at rounding level"""
        matrix = gap_conditioned(20, 2, 9)
        assert symmetry_defect(matrix_operator(matrix), 20, RngStream(1)) <= 1e-12 * 21

    def test_asymmetric_matrix_fails(self):
        """A non-symmetric operator is detected"""
        matrix = np.triu(np.ones((6, 6)))
        assert symmetry_defect(lambda v: matrix @ v, 6, RngStream(1)) > 1e-3

    def test_spectral_norm_estimate(self):
        """diag(3, -5, 1) has norm 5"""
        estimate = spectral_norm_estimate(matrix_operator(np.diag([3.0, -5.0, 1.0])), 3, RngStream(2))
        assert estimate == pytest.approx(5.0, rel=1e-8)

    def test_mlp_hvp_symmetric(self):
        """Finite-difference MLP products pass the symmetry check"""
        family = MlpFamily.from_spec(MlpFamilySpec(layer_sizes=[4, 8, 1], max_samples=12))
        w = family.initial_weights()
        operator = family_operator(family, 10, w)
        lam1 = spectral_norm_estimate(operator, family.dimension, RngStream(3))
        defect = symmetry_defect(operator, family.dimension, RngStream(4))
        assert defect <= 1e-6 * (1 + lam1)
