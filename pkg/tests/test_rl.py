"""
Tests for the K-action value solvers.
"""

import numpy as np
import pytest

from app.exceptions import MissingActionDataError, RangeViolationError
from app.models.dataset import PairedDataset
from app.models.links import LinkFamily
from app.models.net import ShallowNet
from app.models.quadrature import Grid1D
from app.rng import RandomStreams
from app.schemas.problems import Ar1Model, RlSpec
from app.schemas.training import OptimizerConfig
from app.services.estimator_service import EstimatorService
from app.services.oracle_service import OracleService
from app.services.rl_service import RlService, default_rl_spec, optimal_action, reward
from app.services.simulation_service import SimulationService, transitions_from_trajectory

pytestmark = pytest.mark.filterwarnings("ignore::app.exceptions.TailMassWarning")

GRID = Grid1D.uniform(-20.0, 20.0, 401)


@pytest.fixture
def service():
    return RlService(OracleService(strict_tail=False), EstimatorService(RandomStreams(0), strict_range=True))


def test_numeric_values_within_discounted_bounds(service):
    """Test min R / (1 - gamma) <= U^j <= max R / (1 - gamma) after convergence."""
    numeric = service.solve_rl_numeric(default_rl_spec(), GRID, iters=200)
    for values in numeric.values:
        assert values.min() >= 1.0 - 1e-6
        assert values.max() <= 5.0 + 1e-6


def test_numeric_residuals_contract(service):
    """Test that each sup-norm change is at most gamma times the previous one."""
    numeric = service.solve_rl_numeric(default_rl_spec(gamma=0.8), GRID, iters=60)
    r = numeric.residuals
    assert np.all(r[1:] <= 0.8 * r[:-1] + 1e-12)


def test_zero_discount_is_one_step_expectation(service):
    """Test that gamma = 0 gives U^j = F^j R."""
    spec = default_rl_spec(gamma=0.0)
    numeric = service.solve_rl_numeric(spec, GRID, iters=3)
    for j, model in enumerate(spec.actions):
        matrix = service.oracle.build_cdf_matrix(model.cond_cdf, GRID, GRID)
        expected = service.oracle.cond_expectation_numeric(matrix, reward(GRID.points))
        assert np.allclose(numeric.values[j], expected, atol=1e-14)


def test_single_action_constant_reward(service):
    """Test U = c / (1 - gamma) for one action and constant reward."""
    spec = RlSpec(actions=[Ar1Model(r=0.5, s=1.0)], reward_fn=lambda s: np.full_like(s, 0.3), gamma=0.5)
    grid = Grid1D.uniform(-10.0, 10.0, 201)
    numeric = service.solve_rl_numeric(spec, grid, iters=100)
    assert np.max(np.abs(numeric.values[0] - 0.6)) <= 1e-9


def test_numeric_matches_fixed_point_solver(service):
    """Test that the value solver is exactly the generic fixed-point iteration."""
    spec = default_rl_spec()
    numeric = service.solve_rl_numeric(spec, GRID, iters=15)
    matrices = [service.oracle.build_cdf_matrix(model.cond_cdf, GRID, GRID) for model in spec.actions]
    r = reward(GRID.points)
    integrand = lambda y, us: r + 0.8 * np.max(np.vstack(us), axis=0)
    direct = service.oracle.fixed_point_solve(matrices, [integrand] * 2, [np.zeros(401)] * 2, 15)
    for ours, theirs in zip(numeric.values, direct.values):
        assert np.array_equal(ours, theirs)


def test_optimal_action_ties_and_shift():
    """Test smallest-index tie-breaking and invariance under a common shift."""
    u1 = np.array([1.0, 2.0, 3.0])
    u2 = np.array([1.0, 3.0, 2.0])
    assert optimal_action([u1, u2]).tolist() == [1, 2, 1]
    assert optimal_action([u1 + 7.5, u2 + 7.5]).tolist() == [1, 2, 1]


def test_datadriven_trains_one_network_per_action(service):
    """Test the data-driven solver on a short random-action trajectory."""
    spec = default_rl_spec()
    simulator = SimulationService(np.random.default_rng(4))
    actions = simulator.random_actions(200, 2)
    states = simulator.simulate_controlled(spec, actions)
    transitions = transitions_from_trajectory(states, actions)
    link = LinkFamily("C1", a=1.0, b=5.0)
    nets = [ShallowNet.init(6, 1, 1), ShallowNet.init(6, 1, 2)]
    estimate = service.solve_rl_datadriven(transitions, spec, [link, link], nets, OptimizerConfig(iters=50))
    assert len(estimate.estimators) == 2
    values = estimate.values(np.linspace(-3, 3, 7))
    assert all(np.all((v >= 1.0) & (v <= 5.0)) for v in values)
    assert set(estimate.optimal_action(np.linspace(-3, 3, 7)).tolist()) <= {1, 2}


def test_datadriven_requires_every_action(service):
    """Test MissingActionDataError when an action never occurs."""
    transitions = PairedDataset(np.zeros(3), np.zeros(3), np.ones(3, dtype=int))
    with pytest.raises(MissingActionDataError):
        service.solve_rl_datadriven(
            transitions, default_rl_spec(), [LinkFamily("A1")] * 2, [ShallowNet.init(3, 1, 0)] * 2, OptimizerConfig(iters=1)
        )


def test_datadriven_rejects_narrow_link(service):
    """Test RangeViolationError when the link closure misses the value bounds."""
    transitions = PairedDataset(np.zeros(4), np.zeros(4), np.array([1, 2, 1, 2]))
    link = LinkFamily("C1", a=2.0, b=5.0)
    with pytest.raises(RangeViolationError):
        service.solve_rl_datadriven(
            transitions, default_rl_spec(), [link, link], [ShallowNet.init(3, 1, 0)] * 2, OptimizerConfig(iters=1)
        )
