from src.numerics.arrays import FloatArray, Matrix, Vector
from src.numerics.linalg import (as_sym_matrix, as_vector, dense_sym_eigh,
                                 gaussian_quartic_moment, orthonormality_error,
                                 projector_distance, solve_spd, spectral_norm)
from src.numerics.rng import (RngStream, sample_std_normal,
                              sample_std_normal_matrix)

__all__ = [
    "FloatArray",
    "Matrix",
    "RngStream",
    "Vector",
    "as_sym_matrix",
    "as_vector",
    "dense_sym_eigh",
    "gaussian_quartic_moment",
    "orthonormality_error",
    "projector_distance",
    "sample_std_normal",
    "sample_std_normal_matrix",
    "solve_spd",
    "spectral_norm",
]
