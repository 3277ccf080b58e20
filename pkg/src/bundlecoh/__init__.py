"""Exact cohomology of sheaves on finite posets and of bundles of such sheaves."""

from .bundle import Bundle, constant_bundle, total_sheaf, validate_bundle
from .decomp import verify_main_theorem
from .linalg import Matrix
from .poset import Poset, is_recursively_admissible
from .sheaf import Sheaf, SheafMorphism, cochain_complex, cohomology, constant_sheaf, validate_sheaf
from .spectral import build_bicomplex, spectral_pages

__version__ = "0.1.0"

__all__ = [
    "Bundle",
    "Matrix",
    "Poset",
    "Sheaf",
    "SheafMorphism",
    "build_bicomplex",
    "cochain_complex",
    "cohomology",
    "constant_bundle",
    "constant_sheaf",
    "is_recursively_admissible",
    "spectral_pages",
    "total_sheaf",
    "validate_bundle",
    "validate_sheaf",
    "verify_main_theorem",
]
