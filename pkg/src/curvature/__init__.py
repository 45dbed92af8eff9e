from src.curvature.basis_io import load_basis, save_basis, sidecar_paths
from src.curvature.eigensolver import (dense_subspace, hvp_call_count,
                                       spectral_norm_estimate, symmetry_defect,
                                       top_d_eigenpairs)
from src.curvature.models import EigSolverConfig, SubspaceBasis
from src.curvature.operators import (CountingOperator, family_operator,
                                     matrix_operator)

__all__ = [
    "CountingOperator",
    "EigSolverConfig",
    "SubspaceBasis",
    "dense_subspace",
    "family_operator",
    "hvp_call_count",
    "load_basis",
    "matrix_operator",
    "save_basis",
    "sidecar_paths",
    "spectral_norm_estimate",
    "symmetry_defect",
    "top_d_eigenpairs",
]
