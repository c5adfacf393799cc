"""
Service layer orchestrating experiment runs and curve comparisons.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import pydantic
import scipy

import app
from app.exceptions import CheckFailedError, ConfigError, GridMismatchError
from app.models.estimator import TrainedEstimator
from app.models.links import LinkFamily
from app.models.net import ShallowNet
from app.models.quadrature import Grid1D
from app.rng import RandomStreams
from app.schemas.run import EXPERIMENT_DEFAULTS, RunConfig
from app.services import benchmarks
from app.services.estimator_service import EstimatorService
from app.services.oracle_service import OracleService
from app.services.rl_service import RlService, default_rl_spec
from app.services.simulation_service import SimulationService, transitions_from_trajectory
from app.services.stopping_service import StoppingService, default_stopping_spec
from app import storage

logger = logging.getLogger(__name__)

ORACLE_TOLERANCE = 1e-3
# stopping estimates are scored where the training chain visits
STOPPING_SCORE_HALF_WIDTH = 10.0


@dataclass
class RunResult:
    """In-memory artifacts of one run."""

    curve: Dict[str, np.ndarray]
    costs: Dict[str, np.ndarray] = field(default_factory=dict)
    residuals: Dict[str, np.ndarray] = field(default_factory=dict)
    trajectory: Dict[str, np.ndarray] = field(default_factory=dict)
    summary: Dict[str, float] = field(default_factory=dict)
    estimators: Dict[str, TrainedEstimator] = field(default_factory=dict)


def rmse(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.sqrt(np.mean((np.asarray(a) - np.asarray(b)) ** 2)))


def maxabs(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


METRICS = {"rmse": rmse, "maxabs": maxabs}


def _labels(links: List[LinkFamily]) -> List[str]:
    """Column labels; repeated family ids get a position suffix."""
    ids = [link.label for link in links]
    return [fid if ids.count(fid) == 1 else f"{fid}_{k + 1}" for k, fid in enumerate(ids)]


class ExperimentService:
    """Runs one configured experiment and writes its artifacts."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.streams = RandomStreams(config.seed)
        self.oracle = OracleService(strict_tail=config.strict_tail)
        self.estimator = EstimatorService(self.streams, strict_range=config.strict_range)

    def _net(self, label: str) -> ShallowNet:
        return ShallowNet.init(self.config.hidden, 1, self.streams.stream_seed(f"init-{label}"))

    def run(self) -> RunResult:
        """
        Run the experiment and, when ``out`` is set, write its artifacts.

        Returns:
            RunResult: Curve columns, cost histories and summary metrics

        Raises:
            LinkfitError: Any validation or numerical failure of the underlying services
        """
        runners = {
            "ce-a": self._run_ce_a,
            "ce-b": self._run_ce_b,
            "stopping": self._run_stopping,
            "rl": self._run_rl,
            "lr": self._run_lr,
            "oracle-check": self._run_oracle_check,
        }
        logger.info(f"Running {self.config.experiment} with seed {self.config.seed}")
        try:
            result = runners[self.config.experiment]()
        except Exception as e:
            logger.error(f"Failed to run {self.config.experiment}: {e}")
            raise
        for name, value in result.summary.items():
            logger.info(f"{self.config.experiment} {name}={value:.6g}")
        if self.config.out:
            self.write(result, Path(self.config.out))
        return result

    # ------------------------------------------------------------------
    # Conditional expectations
    # ------------------------------------------------------------------

    def _run_ce(self, sampler, exact_fn, cdf_fn) -> RunResult:
        config = self.config
        data = sampler(config.samples, self.streams.stream("data"))
        x = config.eval_grid.to_grid().points
        exact = exact_fn(x)
        matrix = self.oracle.build_cdf_matrix(cdf_fn, config.grid.to_grid(), Grid1D(x))
        numeric = self.oracle.cond_expectation_numeric(matrix, matrix.y_grid.points)

        result = RunResult(curve={"x": x, "exact": exact, "numeric": numeric})
        result.summary["rmse_numeric"] = rmse(numeric, exact)
        links = config.link_families()
        for label, link in zip(_labels(links), links):
            est = self.estimator.train_cond_expectation(
                data, benchmarks.identity, link, self._net(link.spec()), config.optimizer()
            )
            name = f"est_{label}"
            result.curve[name] = est.predict_batch(x)
            result.costs[name] = est.cost_history
            result.estimators[name] = est
            result.summary[f"rmse_{label}"] = rmse(result.curve[name], exact)
        return result

    def _run_ce_a(self) -> RunResult:
        s = self.config.noise_var
        return self._run_ce(
            partial(benchmarks.sample_example_a, s=s),
            benchmarks.exact_example_a,
            partial(benchmarks.cond_cdf_example_a, s=s),
        )

    def _run_ce_b(self) -> RunResult:
        s = self.config.noise_var
        return self._run_ce(
            partial(benchmarks.sample_example_b, s=s),
            partial(benchmarks.exact_example_b, s=s),
            partial(benchmarks.cond_cdf_example_b, s=s),
        )

    # ------------------------------------------------------------------
    # Optimal stopping
    # ------------------------------------------------------------------

    def _run_stopping(self) -> RunResult:
        config = self.config
        spec = default_stopping_spec(alpha=config.alpha, q=config.q, dynamics=config.ar_models()[0])
        service = StoppingService(self.oracle, self.estimator)
        states = SimulationService(self.streams.stream("trajectory")).simulate_ar1(spec.dynamics, config.samples)
        transitions = transitions_from_trajectory(states)
        numeric = service.solve_stopping_numeric(spec, config.grid.to_grid(), config.numeric_iters)

        x = config.eval_grid.to_grid().points
        q = spec.q_fn(x)
        result = RunResult(curve={"x": x, "p": spec.p_fn(x), "qU_numeric": q + numeric.value_at(x)})
        result.trajectory = {"t": np.arange(states.size, dtype=float), "x": states}
        result.residuals["numeric"] = numeric.residuals
        result.summary["numeric_residual"] = float(numeric.residuals[-1])
        dense = np.abs(x) <= STOPPING_SCORE_HALF_WIDTH
        links = config.link_families()
        for label, link in zip(_labels(links), links):
            est = service.solve_stopping_datadriven(transitions, spec, link, self._net(link.spec()), config.optimizer())
            name = f"qU_{label}"
            result.curve[name] = q + est.predict_batch(x)
            result.costs[name] = est.cost_history
            result.estimators[name] = est
            result.summary[f"rmse_{label}"] = rmse(result.curve[name][dense], result.curve["qU_numeric"][dense])
        return result

    # ------------------------------------------------------------------
    # Reinforcement learning
    # ------------------------------------------------------------------

    def _run_rl(self) -> RunResult:
        config = self.config
        spec = default_rl_spec(gamma=config.gamma, actions=config.ar_models())
        service = RlService(self.oracle, self.estimator)
        k = spec.num_actions
        actions = SimulationService(self.streams.stream("actions")).random_actions(config.samples, k)
        trajectory_rng = self.streams.stream("trajectory")
        x0 = math.sqrt(spec.actions[0].s) * trajectory_rng.standard_normal()
        states = SimulationService(trajectory_rng).simulate_controlled(spec, actions, x0)
        transitions = transitions_from_trajectory(states, actions)
        numeric = service.solve_rl_numeric(spec, config.grid.to_grid(), config.numeric_iters)

        s = config.eval_grid.to_grid().points
        result = RunResult(curve={"s": s})
        for j in range(1, k + 1):
            result.curve[f"U{j}_num"] = numeric.value_at(j, s)
        result.residuals["numeric"] = numeric.residuals
        result.summary["numeric_residual"] = float(numeric.residuals[-1])
        links = config.link_families()
        for label, link in zip(_labels(links), links):
            nets = [self._net(f"{link.spec()}-{j}") for j in range(1, k + 1)]
            estimate = service.solve_rl_datadriven(transitions, spec, [link] * k, nets, config.optimizer())
            values = estimate.values(s)
            for j, (est, value) in enumerate(zip(estimate.estimators, values), start=1):
                name = f"U{j}_{label}"
                result.curve[name] = value
                result.costs[name] = est.cost_history
                result.estimators[name] = est
                result.summary[f"maxabs_U{j}_{label}"] = maxabs(value, result.curve[f"U{j}_num"])
            result.curve[f"action_{label}"] = estimate.optimal_action(s).astype(float)
        return result

    # ------------------------------------------------------------------
    # Likelihood ratio
    # ------------------------------------------------------------------

    def _run_lr(self) -> RunResult:
        config = self.config
        xs_g = self.streams.stream("data-g").standard_normal(config.samples)
        xs_f = config.lr_shift + self.streams.stream("data-f").standard_normal(config.samples)
        x = config.eval_grid.to_grid().points
        shift = config.lr_shift
        exact = shift * x - 0.5 * shift**2
        result = RunResult(curve={"x": x, "exact": exact})
        links = config.link_families()
        for label, link in zip(_labels(links), links):
            est = self.estimator.train_likelihood_ratio(
                xs_g, xs_f, link, self._net(link.spec()), config.optimizer(), mode=config.mode
            )
            name = f"est_{label}"
            result.curve[name] = est.predict_raw(x)
            result.costs[name] = est.cost_history
            result.estimators[name] = est
            result.summary[f"rmse_{label}"] = rmse(result.curve[name], exact)
        return result

    # ------------------------------------------------------------------
    # Oracle self-check
    # ------------------------------------------------------------------

    def _run_oracle_check(self) -> RunResult:
        s = self.config.noise_var
        x_grid = self.config.eval_grid.to_grid()
        x = x_grid.points
        grid_a = self.config.grid.to_grid()
        grid_b = EXPERIMENT_DEFAULTS["ce-b"]["grid"].to_grid()

        cdf_a = self.oracle.build_cdf_matrix(partial(benchmarks.cond_cdf_example_a, s=s), grid_a, x_grid)
        pdf_a = self.oracle.build_pdf_matrix(partial(benchmarks.cond_pdf_example_a, s=s), grid_a, x_grid)
        cdf_b = self.oracle.build_cdf_matrix(partial(benchmarks.cond_cdf_example_b, s=s), grid_b, x_grid)
        exact_a, exact_b = benchmarks.exact_example_a(x), benchmarks.exact_example_b(x, s)
        numeric_a = self.oracle.cond_expectation_numeric(cdf_a, grid_a.points)
        numeric_b = self.oracle.cond_expectation_numeric(cdf_b, grid_b.points)

        summary = {
            "tail_lower_a": cdf_a.lower_tail,
            "tail_upper_a": cdf_a.upper_tail,
            "tail_lower_b": cdf_b.lower_tail,
            "tail_upper_b": cdf_b.upper_tail,
            "row_sum_deviation_pdf_a": pdf_a.row_sum_deviation,
            "maxabs_a": maxabs(numeric_a, exact_a),
            "maxabs_b": maxabs(numeric_b, exact_b),
            "maxabs_pdf_vs_cdf_a": maxabs(self.oracle.cond_expectation_numeric(pdf_a, grid_a.points), numeric_a),
        }
        result = RunResult(
            curve={"x": x, "exact_a": exact_a, "numeric_a": numeric_a, "exact_b": exact_b, "numeric_b": numeric_b},
            summary=summary,
        )
        failures = []
        if max(cdf_a.lower_tail, cdf_a.upper_tail, cdf_b.lower_tail, cdf_b.upper_tail) > self.oracle.tail_tolerance:
            failures.append("tail mass")
        if pdf_a.row_sum_deviation > self.oracle.row_sum_tolerance:
            failures.append("pdf row sums")
        if max(summary["maxabs_a"], summary["maxabs_b"]) > ORACLE_TOLERANCE:
            failures.append("numeric vs exact")
        if failures:
            if self.config.out:
                self.write(result, Path(self.config.out))
            raise CheckFailedError(f"oracle check failed: {', '.join(failures)}")
        return result

    # ------------------------------------------------------------------
    # Artifacts
    # ------------------------------------------------------------------

    def manifest(self, result: RunResult) -> dict:
        return {
            "config": self.config.resolved(),
            "rng": self.streams.describe(),
            "versions": {
                "linkfit": app.__version__,
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "pydantic": pydantic.VERSION,
            },
            "summary": {name: float(value) for name, value in result.summary.items()},
        }

    def write(self, result: RunResult, out: Path) -> None:
        storage.write_csv(out / "curve.csv", result.curve)
        if result.trajectory:
            storage.write_csv(out / "trajectory.csv", result.trajectory)
        if result.costs:
            storage.write_csv(out / "costs.csv", storage.cost_columns(list(result.costs.items())))
        if result.residuals:
            storage.write_csv(out / "residuals.csv", storage.cost_columns(list(result.residuals.items())))
        for name, est in result.estimators.items():
            storage.save_checkpoint(out / f"{name}.ckpt", est.net, est.link.spec())
        storage.write_manifest(out / "manifest.json", self.manifest(result))


def compare_curves(
    curve_csv: str,
    reference_csv: str,
    interval: Optional[Tuple[float, float]] = None,
    metric: str = "rmse",
    column: Optional[str] = None,
    reference_column: Optional[str] = None,
) -> float:
    """
    Metric between one column of a curve file and one of a reference file.

    Both files must share their first (grid) column. Rows with grid values outside
    ``interval`` are ignored.

    Raises:
        GridMismatchError: If the grid columns differ
        ConfigError: If a column is missing or no rows fall in the interval
    """
    if metric not in METRICS:
        raise ConfigError(f"unknown metric '{metric}', expected one of {sorted(METRICS)}")
    names, data = storage.read_csv(curve_csv)
    ref_names, ref = storage.read_csv(reference_csv)
    if data.shape[0] != ref.shape[0] or not np.array_equal(data[:, 0], ref[:, 0]):
        raise GridMismatchError(f"{curve_csv} and {reference_csv} do not share the grid column")

    column = column or names[1]
    if reference_column is None:
        reference_column = column if column in ref_names else ref_names[1]
    if column not in names:
        raise ConfigError(f"{curve_csv} has no column '{column}'")
    if reference_column not in ref_names:
        raise ConfigError(f"{reference_csv} has no column '{reference_column}'")

    grid = data[:, 0]
    rows = np.ones(grid.size, dtype=bool)
    if interval is not None:
        rows = (grid >= interval[0]) & (grid <= interval[1])
    if not rows.any():
        raise ConfigError(f"no grid rows inside the interval {interval}")
    value = METRICS[metric](data[rows, names.index(column)], ref[rows, ref_names.index(reference_column)])
    logger.info(f"Compared {column} against {reference_column}: {metric}={value:.6g}")
    return value
