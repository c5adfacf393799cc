"""
Service layer for quadrature-based conditional expectations and the numeric
fixed-point solver.
"""

import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from app.config import settings
from app.exceptions import NonFiniteIterateError, ShapeError, TailMassError, TailMassWarning
from app.models.quadrature import Grid1D, QuadMatrix

logger = logging.getLogger(__name__)

KernelFn = Callable[[np.ndarray, np.ndarray], np.ndarray]
# h(y, [u_1, ..., u_K]) -> integrand values on the y grid
IntegrandFn = Callable[[np.ndarray, List[np.ndarray]], np.ndarray]

ROW_BLOCK = 512


@dataclass
class FixedPointResult:
    """Final iterates and the sup-norm change of every iteration."""

    values: List[np.ndarray]
    residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def final_residual(self) -> float:
        return float(self.residuals[-1]) if self.residuals.size else float("nan")


def trapezoid_weights(points: np.ndarray) -> np.ndarray:
    """Per-point trapezoid weights 0.5 (y_{j+1} - y_{j-1}), halved at the ends."""
    w = np.empty_like(points)
    w[0] = 0.5 * (points[1] - points[0])
    w[-1] = 0.5 * (points[-1] - points[-2])
    w[1:-1] = 0.5 * (points[2:] - points[:-2])
    return w


class OracleService:
    """Builds quadrature matrices and iterates systems of sampled conditional expectations."""

    def __init__(
        self,
        tail_tolerance: Optional[float] = None,
        row_sum_tolerance: Optional[float] = None,
        strict_tail: Optional[bool] = None,
    ):
        self.tail_tolerance = settings.tail_tolerance if tail_tolerance is None else tail_tolerance
        self.row_sum_tolerance = settings.row_sum_tolerance if row_sum_tolerance is None else row_sum_tolerance
        self.strict_tail = settings.strict_tail if strict_tail is None else strict_tail

    def _report_tail(self, message: str) -> None:
        if self.strict_tail:
            logger.error(f"Failed to build quadrature matrix: {message}")
            raise TailMassError(message)
        logger.warning(message)
        warnings.warn(message, TailMassWarning, stacklevel=3)

    def build_cdf_matrix(
        self,
        cond_cdf: KernelFn,
        y_grid: Grid1D,
        x_grid: Grid1D,
        clamp: bool = True,
    ) -> QuadMatrix:
        """
        Centred-difference stencil on a conditional CDF.

        Column j of row i holds 0.5 [F(Y_{j+1} | X_i) - F(Y_{j-1} | X_i)], with one-sided
        halves at the first and last columns. With ``clamp`` the first and last CDF
        samples are forced to 0 and 1, which makes every row sum to one.

        Args:
            cond_cdf: F(y, x), broadcasting over a row of y and a column of x
            y_grid: Integration grid (columns)
            x_grid: Conditioning grid (rows)
            clamp: Force F(Y_1 | x) = 0 and F(Y_n | x) = 1

        Returns:
            QuadMatrix: Stencil matrix with the pre-clamp tail masses

        Raises:
            TailMassError: If the tail mass exceeds tolerance and strict checking is on
        """
        y = y_grid.points
        x = x_grid.points
        entries = np.empty((x.size, y.size))
        lower_tail = 0.0
        upper_tail = 0.0
        for start in range(0, x.size, ROW_BLOCK):
            rows = slice(start, min(start + ROW_BLOCK, x.size))
            cdf = np.array(cond_cdf(y[None, :], x[rows, None]), dtype=float)
            cdf = np.broadcast_to(cdf, (x[rows].size, y.size)).copy()
            lower_tail = max(lower_tail, float(np.max(cdf[:, 0])))
            upper_tail = max(upper_tail, float(np.max(1.0 - cdf[:, -1])))
            if clamp:
                cdf[:, 0] = 0.0
                cdf[:, -1] = 1.0
            block = entries[rows]
            block[:, 0] = 0.5 * (cdf[:, 1] - cdf[:, 0])
            block[:, 1:-1] = 0.5 * (cdf[:, 2:] - cdf[:, :-2])
            block[:, -1] = 0.5 * (cdf[:, -1] - cdf[:, -2])

        if max(lower_tail, upper_tail) > self.tail_tolerance:
            self._report_tail(
                f"probability mass outside the y grid: lower {lower_tail:.3g}, upper {upper_tail:.3g} "
                f"(tolerance {self.tail_tolerance:g})"
            )
        matrix = QuadMatrix(entries, x_grid, y_grid, "cdf-stencil", lower_tail, upper_tail)
        logger.info(f"Built cdf-stencil matrix {matrix.shape}, tails ({lower_tail:.3g}, {upper_tail:.3g})")
        return matrix

    def build_pdf_matrix(self, cond_pdf: KernelFn, y_grid: Grid1D, x_grid: Grid1D) -> QuadMatrix:
        """
        Trapezoid rule on a conditional density: M_ij = f(Y_j | X_i) w_j.

        Raises:
            TailMassError: If a row sum deviates from one beyond tolerance under strict checking
        """
        y = y_grid.points
        x = x_grid.points
        weights = trapezoid_weights(y)
        entries = np.empty((x.size, y.size))
        for start in range(0, x.size, ROW_BLOCK):
            rows = slice(start, min(start + ROW_BLOCK, x.size))
            pdf = np.broadcast_to(np.asarray(cond_pdf(y[None, :], x[rows, None]), dtype=float), (x[rows].size, y.size))
            entries[rows] = pdf * weights[None, :]

        deviation = float(np.max(np.abs(entries.sum(axis=1) - 1.0)))
        if deviation > self.row_sum_tolerance:
            self._report_tail(
                f"pdf-trapezoid row sums deviate from one by {deviation:.3g} (tolerance {self.row_sum_tolerance:g})"
            )
        matrix = QuadMatrix(entries, x_grid, y_grid, "pdf-trapezoid", row_sum_deviation=deviation)
        logger.info(f"Built pdf-trapezoid matrix {matrix.shape}, row-sum deviation {deviation:.3g}")
        return matrix

    def cond_expectation_numeric(self, matrix: QuadMatrix, d_values: np.ndarray) -> np.ndarray:
        """Sampled conditional expectation F @ D."""
        return matrix.apply(d_values)

    def fixed_point_solve(
        self,
        matrices: Sequence[QuadMatrix],
        integrands: Sequence[IntegrandFn],
        initial: Sequence[np.ndarray],
        iters: int,
        monitor: Optional[Callable[[int, List[np.ndarray]], None]] = None,
    ) -> FixedPointResult:
        """
        Jacobi iteration U^j_t = F^j @ h_j(Y, U^1_{t-1}, ..., U^K_{t-1}).

        Args:
            matrices: K square matrices sharing one grid
            integrands: K integrand maps h_j
            initial: K starting vectors
            iters: Number of iterations
            monitor: Optional callback receiving (t, iterates) after every iteration

        Returns:
            FixedPointResult: Final vectors and sup-norm residual per iteration

        Raises:
            ShapeError: If the matrices do not share a square grid
            NonFiniteIterateError: If an iterate becomes NaN or infinite
        """
        k = len(matrices)
        if k == 0 or len(integrands) != k or len(initial) != k:
            raise ShapeError(f"need K matrices, integrands and starting vectors, got {k}, {len(integrands)}, {len(initial)}")
        first = matrices[0]
        for matrix in matrices:
            if not matrix.is_square_on(first):
                raise ShapeError("fixed-point matrices must share one square grid")
        y = first.y_grid.points
        current = [np.array(u, dtype=float).reshape(-1) for u in initial]
        for u in current:
            if u.shape != y.shape:
                raise ShapeError(f"starting vector of length {u.size} for a grid of {y.size} points")

        residuals = np.empty(iters)
        for t in range(iters):
            updated = [matrices[j].entries @ np.asarray(integrands[j](y, current), dtype=float) for j in range(k)]
            if not all(np.all(np.isfinite(u)) for u in updated):
                logger.error(f"Failed to solve fixed point: non-finite iterate at iteration {t}")
                raise NonFiniteIterateError(t)
            residuals[t] = max(float(np.max(np.abs(new - old))) for new, old in zip(updated, current))
            current = updated
            if monitor is not None:
                monitor(t, current)
            if (t + 1) % 500 == 0:
                logger.debug(f"fixed-point iteration {t + 1}: residual={residuals[t]:.3g}")

        logger.info(f"Solved {k}-vector fixed point in {iters} iterations, final residual {residuals[-1]:.3g}")
        return FixedPointResult(current, residuals)
