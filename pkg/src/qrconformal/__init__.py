"""Exact symbolic and matrix computations for q_R-conformal generators in sl(2) Verma modules."""

__version__ = "0.1.0"

from .errors import (
    CancellationWarning,
    Divergent,
    ModuleUndefined,
    NonPositiveNorms,
    PoleAtPoint,
    PoleAtZeroParam,
    PreconditionError,
    QRConformalError,
    TowerMismatch,
)
from .exact_arith import Level, RatFunc
from .symbol_ore import GradedOperator, op_commutator, op_mul

__all__ = [
    "CancellationWarning",
    "Divergent",
    "GradedOperator",
    "Level",
    "ModuleUndefined",
    "NonPositiveNorms",
    "PoleAtPoint",
    "PoleAtZeroParam",
    "PreconditionError",
    "QRConformalError",
    "RatFunc",
    "TowerMismatch",
    "op_commutator",
    "op_mul",
]
