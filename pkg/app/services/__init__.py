"""
Service layer for training, quadrature oracles, simulation and experiment runs.
"""

from .optimizer_service import PowerNormOptimizer, PowerNormState, EpochOrder
from .estimator_service import EstimatorService
from .oracle_service import OracleService, FixedPointResult
from .simulation_service import SimulationService
from .stopping_service import StoppingService
from .rl_service import RlService
from .experiment_service import ExperimentService, compare_curves

__all__ = [
    "PowerNormOptimizer", "PowerNormState", "EpochOrder",
    "EstimatorService",
    "OracleService", "FixedPointResult",
    "SimulationService",
    "StoppingService",
    "RlService",
    "ExperimentService", "compare_curves",
]
