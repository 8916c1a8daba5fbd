"""Weak-constraint 4D-Var (forcing formulation) with randomized limited-memory preconditioners."""
from .errors import ConfigError, DenseCapError, NumericalError, Wc4dvarError
from .kernels import BACKEND
from .krylov import RitzPairs, pcg_split
from .lmp import LmpFactor, build_spectral_lmp
from .operators import HessianOperator, assemble_dense
from .randevd import SketchConfig, nystrom, revd, revd_ritzit

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ConfigError", "DenseCapError", "HessianOperator", "LmpFactor",
    "NumericalError", "RitzPairs", "SketchConfig", "Wc4dvarError", "assemble_dense",
    "build_spectral_lmp", "nystrom", "pcg_split", "revd", "revd_ritzit",
]
