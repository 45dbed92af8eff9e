from src.loss_family.base import LossFamily, WeightsLike
from src.loss_family.curvature_ops import (CurvatureOperator, DenseCurvature,
                                           FactoredCurvature)
from src.loss_family.factory import (build_family, dump_family_spec,
                                     format_validation_error, load_family_spec,
                                     parse_family_spec)
from src.loss_family.mlp import MlpFamily
from src.loss_family.quadratic import QuadraticFamily
from src.loss_family.specs import (FamilySpec, MlpFamilySpec, Provenance,
                                   QuadraticFamilySpec, Weights, family_hash)

__all__ = [
    "CurvatureOperator",
    "DenseCurvature",
    "FactoredCurvature",
    "FamilySpec",
    "LossFamily",
    "MlpFamily",
    "MlpFamilySpec",
    "Provenance",
    "QuadraticFamily",
    "QuadraticFamilySpec",
    "Weights",
    "WeightsLike",
    "build_family",
    "dump_family_spec",
    "family_hash",
    "format_validation_error",
    "load_family_spec",
    "parse_family_spec",
]
