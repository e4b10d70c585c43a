"""Exact symmetry analysis of the free higher-derivative particle q^(2n) = 0."""

from .jet_algebra import JetPolynomial, ModelConfig
from .symmetry_solver import NamedBasis, PointSymmetry, classify, derive_symmetries

__all__ = [
    "JetPolynomial",
    "ModelConfig",
    "NamedBasis",
    "PointSymmetry",
    "classify",
    "derive_symmetries",
]
__version__ = "0.1.0"
