"""
Pydantic schemas for data validation and run configuration.
"""

from .training import OptimizerConfig
from .grids import GridSpec
from .problems import Ar1Model, StoppingSpec, RlSpec
from .run import RunConfig, EXPERIMENT_DEFAULTS

__all__ = [
    "OptimizerConfig",
    "GridSpec",
    "Ar1Model", "StoppingSpec", "RlSpec",
    "RunConfig", "EXPERIMENT_DEFAULTS",
]
