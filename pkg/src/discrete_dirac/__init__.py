"""Scattering data, resolvents and dispersive decay for the one-dimensional
discrete Dirac operator ``D = D0 + Q`` on two-component lattice sequences."""
from ._accel import USE_NUMBA, backend_name
from .dispersion import PLAIN, TILDE, SpectralPoint, g, stationary_data, theta_from_omega
from .lattice import (
    DomainError,
    LatticeWindow,
    MatrixPotential,
    ModelParams,
    PotentialError,
    SpinorSequence,
    apply_dirac,
    dirac_matrix,
    weighted_norm,
)

__all__ = [
    "USE_NUMBA",
    "backend_name",
    "PLAIN",
    "TILDE",
    "SpectralPoint",
    "g",
    "stationary_data",
    "theta_from_omega",
    "DomainError",
    "LatticeWindow",
    "MatrixPotential",
    "ModelParams",
    "PotentialError",
    "SpinorSequence",
    "apply_dirac",
    "dirac_matrix",
    "weighted_norm",
]
