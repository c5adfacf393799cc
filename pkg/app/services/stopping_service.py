"""
Service layer for Markov optimal stopping.

U(X) = E[min{p(Y), q(Y) + alpha U(Y)} | X] is solved numerically on a grid and
from data; the optimal rule stops at X when p(X) <= q(X) + alpha U(X).
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Union

import numpy as np

from app.models.dataset import PairedDataset
from app.models.estimator import TrainedEstimator
from app.models.links import LinkFamily
from app.models.net import ShallowNet
from app.models.quadrature import Grid1D, QuadMatrix
from app.schemas.problems import Ar1Model, StoppingSpec
from app.schemas.training import OptimizerConfig
from app.services.estimator_service import EstimatorService
from app.services.oracle_service import FixedPointResult, OracleService

logger = logging.getLogger(__name__)

SAMPLING_COST = 0.1


def stopcost(x):
    """Piecewise-linear stopping cost, 1 on the far left, 0.2 around zero and 0.8 on the far right."""
    x = np.asarray(x, dtype=float)
    return np.select(
        [x < -7.0, x < -2.0, x <= 2.0, x < 6.0],
        [np.ones_like(x), 1.0 - (x + 7.0) * 0.8 / 5.0, np.full_like(x, 0.2), 0.2 + (x - 2.0) * 0.6 / 4.0],
        default=0.8,
    )


def sampcost(x, q: float = SAMPLING_COST):
    return np.full_like(np.asarray(x, dtype=float), q)


def default_stopping_spec(
    alpha: float = 1.0, q: float = SAMPLING_COST, dynamics: Optional[Ar1Model] = None
) -> StoppingSpec:
    """Piecewise stopping cost and constant sampling cost; the chain defaults to AR(1) with r = 0.9, s = 5, m = 0."""
    return StoppingSpec(
        dynamics=dynamics or Ar1Model(r=0.9, m=0.0, s=5.0),
        p_fn=stopcost,
        q_fn=lambda x: sampcost(x, q),
        alpha=alpha,
    )


@dataclass
class NumericStopping:
    """Numeric solution sampled on a grid."""

    grid: Grid1D
    values: np.ndarray
    residuals: np.ndarray
    matrix: QuadMatrix

    def value_at(self, x) -> np.ndarray:
        return np.interp(np.asarray(x, dtype=float), self.grid.points, self.values)


class StoppingService:
    """Numeric and data-driven solutions of the optimal stopping equation."""

    def __init__(self, oracle: OracleService, estimator: EstimatorService):
        self.oracle = oracle
        self.estimator = estimator

    @staticmethod
    def integrand(spec: StoppingSpec, p_values: np.ndarray, q_values: np.ndarray) -> Callable:
        alpha = spec.alpha
        return lambda y, us: np.minimum(p_values, q_values + alpha * us[0])

    def solve_stopping_numeric(
        self,
        spec: StoppingSpec,
        grid: Grid1D,
        iters: int = 1000,
        monitor: Optional[Callable[[int, List[np.ndarray]], None]] = None,
    ) -> NumericStopping:
        """
        Iterate U_t = F min(P, Q + alpha U_{t-1}) from U_0 = P.

        Args:
            spec: Stopping problem
            grid: Common state grid for rows and columns
            iters: Number of iterations
            monitor: Optional per-iteration callback forwarded to the fixed-point solver

        Returns:
            NumericStopping: Final U with residual history and the quadrature matrix
        """
        matrix = self.oracle.build_cdf_matrix(spec.dynamics.cond_cdf, grid, grid, clamp=True)
        p_values = np.asarray(spec.p_fn(grid.points), dtype=float)
        q_values = np.asarray(spec.q_fn(grid.points), dtype=float)
        result: FixedPointResult = self.oracle.fixed_point_solve(
            [matrix], [self.integrand(spec, p_values, q_values)], [p_values], iters, monitor
        )
        logger.info(f"Solved stopping problem numerically on {len(grid)} points, residual {result.final_residual:.3g}")
        return NumericStopping(grid, result.values[0], result.residuals, matrix)

    def solve_stopping_datadriven(
        self,
        transitions: PairedDataset,
        spec: StoppingSpec,
        link: LinkFamily,
        net0: ShallowNet,
        config: OptimizerConfig,
        strict_range: Optional[bool] = None,
    ) -> TrainedEstimator:
        """
        Train omega(u(X)) to U(X) from consecutive state pairs.

        The target of pair (X_i, Y_i) is min{p(Y_i), q(Y_i) + alpha omega(u(Y_i))}, with
        the network at the previous iteration's parameters.

        Raises:
            RangeViolationError: If the link closure does not contain [min p, max p]
        """
        alpha = spec.alpha
        p_fn, q_fn = spec.p_fn, spec.q_fn

        def target(y, estimates):
            return np.minimum(p_fn(y), q_fn(y) + alpha * estimates[0])

        states = np.concatenate([transitions.xs[:, 0], transitions.ys[:, 0]])
        p_seen = np.asarray(p_fn(states), dtype=float)
        interval = (float(p_seen.min()), float(p_seen.max()))
        (estimator,) = self.estimator.train_fixed_point(
            [transitions], [target], [link], [net0], config, interval, strict_range
        )
        return estimator

    @staticmethod
    def stopping_rule(
        spec: StoppingSpec,
        source: Union[NumericStopping, TrainedEstimator],
        x,
    ) -> Union[str, np.ndarray]:
        """``stop`` where p(x) <= q(x) + alpha U(x), ``continue`` elsewhere."""
        xs = np.asarray(x, dtype=float)
        flat = np.atleast_1d(xs)
        if isinstance(source, TrainedEstimator):
            values = source.predict_batch(flat)
        else:
            values = source.value_at(flat)
        stop = np.asarray(spec.p_fn(flat)) <= np.asarray(spec.q_fn(flat)) + spec.alpha * values
        decisions = np.where(stop, "stop", "continue")
        return str(decisions[0]) if xs.ndim == 0 else decisions
