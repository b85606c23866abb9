"""Sign-matrix entanglement criteria for CV Gaussian states."""

from .ghzcert import certify_point, kappa_bisep, kappa_ksep, optimal_params, sweep_region
from .model import GhzParams, SymmetricCm, expand_full, pure_ghz_cm
from .signcrit import certify, certify_class, generate_sign_matrices

__version__ = "0.1.0"

__all__ = [
    "GhzParams", "SymmetricCm", "certify", "certify_class", "certify_point", "expand_full",
    "generate_sign_matrices", "kappa_bisep", "kappa_ksep", "optimal_params", "pure_ghz_cm",
    "sweep_region",
]
