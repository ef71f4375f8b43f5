"""Quench charging of spin-lattice quantum batteries and executable charging-power bounds."""
from .kernels import BACKEND
from .operators import (
    HermitianOperator,
    PauliSum,
    PauliTerm,
    SpectralData,
    commutator,
    commutator_norm,
    eigendecompose,
    operator_norm,
    shifted_norm,
    to_dense,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "HermitianOperator",
    "PauliSum",
    "PauliTerm",
    "SpectralData",
    "commutator",
    "commutator_norm",
    "eigendecompose",
    "operator_norm",
    "shifted_norm",
    "to_dense",
]
