"""
Grids and quadrature matrices for numerical conditional expectations.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from app.exceptions import ConfigError, ShapeError


class Grid1D:
    """Strictly increasing finite grid of sample points."""

    def __init__(self, points: np.ndarray):
        points = np.asarray(points, dtype=float).reshape(-1)
        if points.size < 2:
            raise ConfigError(f"grid needs at least 2 points, got {points.size}")
        if not np.all(np.isfinite(points)):
            raise ConfigError("grid points must be finite")
        if not np.all(np.diff(points) > 0):
            raise ConfigError("grid points must be strictly increasing")
        self.points = points

    @classmethod
    def uniform(cls, lo: float, hi: float, n: int) -> "Grid1D":
        """n equally spaced points, endpoints included."""
        return cls(np.linspace(lo, hi, n))

    @classmethod
    def cell_centered(cls, lo: float, hi: float, n: int) -> "Grid1D":
        """Midpoints of n equal cells partitioning [lo, hi]."""
        step = (hi - lo) / n
        return cls(lo + step * (np.arange(n) + 0.5))

    @property
    def bounds(self) -> tuple:
        return float(self.points[0]), float(self.points[-1])

    def __len__(self) -> int:
        return self.points.size

    def same_as(self, other: "Grid1D") -> bool:
        return self.points.shape == other.points.shape and bool(np.array_equal(self.points, other.points))

    def __repr__(self) -> str:
        lo, hi = self.bounds
        return f"<Grid1D(n={len(self)}, lo={lo}, hi={hi})>"


@dataclass
class QuadMatrix:
    """
    Matrix mapping sampled integrand values on ``y_grid`` to sampled conditional
    expectations on ``x_grid``.

    Attributes:
        entries: (len(x_grid), len(y_grid)) nonnegative weights
        kind: ``cdf-stencil`` or ``pdf-trapezoid``
        lower_tail: largest pre-clamp mass below the grid over all rows
        upper_tail: largest pre-clamp mass above the grid over all rows
    """

    entries: np.ndarray
    x_grid: Grid1D
    y_grid: Grid1D
    kind: str
    lower_tail: float = 0.0
    upper_tail: float = 0.0
    row_sum_deviation: Optional[float] = field(default=None)

    def __post_init__(self):
        expected = (len(self.x_grid), len(self.y_grid))
        if self.entries.shape != expected:
            raise ShapeError(f"matrix shape {self.entries.shape} does not match grids {expected}")
        if self.kind not in ("cdf-stencil", "pdf-trapezoid"):
            raise ConfigError(f"unknown quadrature kind '{self.kind}'")
        if self.row_sum_deviation is None:
            self.row_sum_deviation = float(np.max(np.abs(self.entries.sum(axis=1) - 1.0)))

    @property
    def shape(self) -> tuple:
        return self.entries.shape

    def is_square_on(self, other: "QuadMatrix") -> bool:
        """True when both matrices use one common grid for rows and columns."""
        return (
            self.x_grid.same_as(self.y_grid)
            and other.x_grid.same_as(other.y_grid)
            and self.x_grid.same_as(other.x_grid)
        )

    def apply(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float).reshape(-1)
        if values.shape[0] != self.entries.shape[1]:
            raise ShapeError(f"{values.shape[0]} values for a matrix with {self.entries.shape[1]} columns")
        return self.entries @ values

    def __repr__(self) -> str:
        return (
            f"<QuadMatrix(kind={self.kind}, shape={self.shape}, "
            f"tails=({self.lower_tail:.3g}, {self.upper_tail:.3g}))>"
        )
