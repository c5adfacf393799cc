"""
Domain models: link families, networks, datasets, quadrature grids and estimators.
"""

from .base import ParameterSet
from .links import FAMILIES, LinkFamily, RangeInterval
from .net import GradientSet, ShallowNet
from .dataset import PairedDataset
from .quadrature import Grid1D, QuadMatrix
from .estimator import TrainedEstimator

__all__ = [
    "ParameterSet",
    "FAMILIES", "LinkFamily", "RangeInterval",
    "GradientSet", "ShallowNet",
    "PairedDataset",
    "Grid1D", "QuadMatrix",
    "TrainedEstimator",
]
