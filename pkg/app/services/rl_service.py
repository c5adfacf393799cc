"""
Service layer for K-action reinforcement learning with discounted reward.

U^j(S) = E_j[R(S') + gamma max_l U^l(S') | S] is the value of taking action j at S;
the optimal action maximises U^j(S) over j.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from app.models.dataset import PairedDataset
from app.models.estimator import TrainedEstimator
from app.models.links import LinkFamily
from app.models.net import ShallowNet
from app.models.quadrature import Grid1D
from app.schemas.problems import Ar1Model, RlSpec
from app.schemas.training import OptimizerConfig
from app.services.estimator_service import EstimatorService
from app.services.oracle_service import FixedPointResult, OracleService
from app.services.simulation_service import split_by_action
from app.services.stopping_service import stopcost

logger = logging.getLogger(__name__)

# Same piecewise-linear shape as the stopping cost.
reward = stopcost


def default_rl_spec(gamma: float = 0.8, actions: Optional[Sequence[Ar1Model]] = None) -> RlSpec:
    """By default two AR(1) actions pulling the state up (m = 1) or down (m = -1)."""
    return RlSpec(
        actions=list(actions or [Ar1Model(r=0.8, m=1.0, s=1.0), Ar1Model(r=0.8, m=-1.0, s=1.0)]),
        reward_fn=reward,
        gamma=gamma,
    )


def optimal_action(values: Sequence[np.ndarray]) -> np.ndarray:
    """1-based argmax over actions; ties go to the smallest index."""
    return np.argmax(np.vstack([np.asarray(v, dtype=float) for v in values]), axis=0) + 1


@dataclass
class NumericRl:
    grid: Grid1D
    values: List[np.ndarray]
    residuals: np.ndarray

    def value_at(self, j: int, s) -> np.ndarray:
        """Interpolated U^j (1-based j)."""
        return np.interp(np.asarray(s, dtype=float), self.grid.points, self.values[j - 1])

    def optimal_action(self, s) -> np.ndarray:
        return optimal_action([self.value_at(j, s) for j in range(1, len(self.values) + 1)])


@dataclass
class RlEstimate:
    estimators: List[TrainedEstimator]

    def values(self, s) -> List[np.ndarray]:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        return [est.predict_batch(s) for est in self.estimators]

    def optimal_action(self, s) -> np.ndarray:
        return optimal_action(self.values(s))


class RlService:
    """Numeric and data-driven solutions of the K-action value system."""

    def __init__(self, oracle: OracleService, estimator: EstimatorService):
        self.oracle = oracle
        self.estimator = estimator

    @staticmethod
    def integrand(spec: RlSpec, r_values: np.ndarray) -> Callable:
        gamma = spec.gamma
        return lambda y, us: r_values + gamma * np.max(np.vstack(us), axis=0)

    def solve_rl_numeric(
        self,
        spec: RlSpec,
        grid: Grid1D,
        iters: int = 1000,
        monitor: Optional[Callable[[int, List[np.ndarray]], None]] = None,
    ) -> NumericRl:
        """
        Jacobi iteration U^j_t = F^j (R + gamma max_l U^l_{t-1}) from zero vectors.

        Returns:
            NumericRl: K sampled value vectors with residual history
        """
        matrices = [self.oracle.build_cdf_matrix(model.cond_cdf, grid, grid, clamp=True) for model in spec.actions]
        r_values = np.asarray(spec.reward_fn(grid.points), dtype=float)
        integrand = self.integrand(spec, r_values)
        result: FixedPointResult = self.oracle.fixed_point_solve(
            matrices,
            [integrand] * spec.num_actions,
            [np.zeros(len(grid)) for _ in spec.actions],
            iters,
            monitor,
        )
        logger.info(
            f"Solved {spec.num_actions}-action value system on {len(grid)} points, "
            f"residual {result.final_residual:.3g}"
        )
        return NumericRl(grid, result.values, result.residuals)

    def solve_rl_datadriven(
        self,
        transitions: PairedDataset,
        spec: RlSpec,
        links: Sequence[LinkFamily],
        nets: Sequence[ShallowNet],
        config: OptimizerConfig,
        strict_range: Optional[bool] = None,
    ) -> RlEstimate:
        """
        Train one network per action on the transitions carrying that action's label.

        The target of (S, S') is R(S') + gamma max_l omega_l(u_l(S')) with all networks
        at the previous iteration's parameters.

        Raises:
            MissingActionDataError: If an action label has no transitions
            RangeViolationError: If a link closure excludes [min R, max R] / (1 - gamma)
        """
        datasets = split_by_action(transitions, spec.num_actions)
        gamma, reward_fn = spec.gamma, spec.reward_fn

        def target(y, estimates):
            return reward_fn(y) + gamma * np.max(np.vstack(estimates), axis=0)

        states = np.concatenate([transitions.xs[:, 0], transitions.ys[:, 0]])
        r_seen = np.asarray(reward_fn(states), dtype=float)
        interval = (float(r_seen.min()) / (1.0 - gamma), float(r_seen.max()) / (1.0 - gamma))
        estimators = self.estimator.train_fixed_point(
            datasets, [target] * spec.num_actions, links, nets, config, interval, strict_range
        )
        return RlEstimate(estimators)
