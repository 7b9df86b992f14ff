"""Model problems implementing the tame-map contract."""

from .base import GateauxReport, ModelProblem, gateaux_check
from .oracle import OracleUnavailable, oracle_dense_solve
from .nls import NlsResidualProblem, ResidualScaling, TransparencyReport
from .p1 import SmallDivisorProblem

__all__ = [
    "ModelProblem",
    "GateauxReport",
    "gateaux_check",
    "SmallDivisorProblem",
    "NlsResidualProblem",
    "ResidualScaling",
    "TransparencyReport",
    "oracle_dense_solve",
    "OracleUnavailable",
]
