"""
Service layer for data-driven training of conditional expectations, likelihood
ratios and fixed points of conditional-expectation systems.
"""

import logging
import warnings
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from app.config import settings
from app.exceptions import (
    EmptyDatasetError,
    NonFiniteCostError,
    NonFiniteRatioWarning,
    RangeViolationError,
    RangeWarning,
    ShapeError,
    SizeMismatchError,
)
from app.models.dataset import PairedDataset
from app.models.estimator import TrainedEstimator
from app.models.links import LinkFamily
from app.models.net import GradientSet, ShallowNet
from app.rng import RandomStreams
from app.schemas.training import OptimizerConfig
from app.services.optimizer_service import EpochOrder, PowerNormOptimizer, PowerNormState

logger = logging.getLogger(__name__)

ObservationFn = Callable[[np.ndarray], np.ndarray]
# h(y, [omega_1(u_1(y)), ..., omega_K(u_K(y))]) -> targets
TargetFn = Callable[[np.ndarray, List[np.ndarray]], np.ndarray]

PROGRESS_EVERY = 500


def descent_direction(
    net: ShallowNet,
    link: LinkFamily,
    xs: np.ndarray,
    targets: np.ndarray,
    weights: Optional[np.ndarray] = None,
) -> Tuple[GradientSet, np.ndarray]:
    """
    Gradient of sum_i [w_i phi(u_i) + d_i psi(u_i)] at the current parameters.

    Returns the gradient and the raw outputs u_i it was evaluated at.
    """
    u = net.forward_batch(xs)
    fitted = link.omega(u)
    if weights is not None:
        fitted = weights * fitted
    coeffs = (targets - fitted) * link.rho(u)
    return net.weighted_grad(xs, coeffs), u


def mean_cost(
    link: LinkFamily, u: np.ndarray, targets: np.ndarray, weights: Optional[np.ndarray] = None
) -> float:
    phi = link.phi(u)
    if weights is not None:
        phi = weights * phi
    return float(np.mean(phi + targets * link.psi(u)))


def _evaluate(fn: ObservationFn, ys: np.ndarray) -> np.ndarray:
    """Apply an observation function to Y, passing scalars as a 1-d array."""
    values = ys[:, 0] if ys.shape[1] == 1 else ys
    return np.asarray(fn(values), dtype=float).reshape(-1)


class EstimatorService:
    """Trainers built on the shared descent direction and power-normalised step."""

    def __init__(self, streams: Optional[RandomStreams] = None, strict_range: Optional[bool] = None):
        self.streams = streams or RandomStreams(settings.default_seed)
        self.strict_range = settings.strict_range if strict_range is None else strict_range

    # ------------------------------------------------------------------
    # Range checks
    # ------------------------------------------------------------------

    def _check_targets(self, link: LinkFamily, targets: np.ndarray, strict: Optional[bool]) -> None:
        strict = self.strict_range if strict is None else strict
        outside = np.flatnonzero(~link.range().contains(targets))
        if outside.size == 0:
            return
        if strict:
            error = RangeViolationError(outside)
            logger.error(f"Failed to train {link.spec()}: {error}")
            raise error
        warnings.warn(
            f"{outside.size} targets outside range {link.range()} of {link.spec()}",
            RangeWarning,
            stacklevel=3,
        )

    def _check_interval(self, link: LinkFamily, interval: Tuple[float, float], strict: Optional[bool]) -> None:
        strict = self.strict_range if strict is None else strict
        lo, hi = interval
        if link.closure_contains(lo, hi):
            return
        message = f"target interval [{lo}, {hi}] not inside the closure of {link.range()} of {link.spec()}"
        if strict:
            logger.error(f"Failed to train {link.spec()}: {message}")
            raise RangeViolationError([], message)
        warnings.warn(message, RangeWarning, stacklevel=3)

    # ------------------------------------------------------------------
    # Conditional expectation
    # ------------------------------------------------------------------

    def train_cond_expectation(
        self,
        data: PairedDataset,
        d_fn: ObservationFn,
        link: LinkFamily,
        net0: ShallowNet,
        config: OptimizerConfig,
        c_fn: Optional[ObservationFn] = None,
        strict_range: Optional[bool] = None,
    ) -> TrainedEstimator:
        """
        Fit omega(u(X)) to E[d(Y) | X], or to E[d(Y) | X] / E[c(Y) | X] when ``c_fn`` is given.

        Args:
            data: Training pairs (Y_i, X_i)
            d_fn: Observation function d
            link: Link family whose range must contain the targets
            net0: Initial network (left untouched)
            config: Optimizer and schedule settings
            c_fn: Optional positive weight c(Y)
            strict_range: Override of the service-level range strictness

        Returns:
            TrainedEstimator: Trained network with cost and gradient-norm histories

        Raises:
            RangeViolationError: If targets fall outside the open link range
            NonFiniteCostError: If the cost becomes NaN or infinite
        """
        targets = _evaluate(d_fn, data.ys)
        weights = None
        if c_fn is not None:
            weights = _evaluate(c_fn, data.ys)
            nonpositive = np.flatnonzero(~(weights > 0))
            if nonpositive.size:
                raise RangeViolationError(nonpositive, f"weights c(Y) not positive at indices {nonpositive[:10].tolist()}")
            self._check_targets(link, targets / weights, strict_range)
        else:
            self._check_targets(link, targets, strict_range)

        net = net0.copy()
        optimizer = PowerNormOptimizer(PowerNormState.from_config(config))
        order = EpochOrder(len(data), config.shuffle, self.streams.stream("epoch-order"))
        full_batch = config.mode == "full-batch"
        costs = np.empty(config.iters)
        norms = np.empty(config.iters)

        for t in range(config.iters):
            idx = order.indices(config, t)
            w_batch = None if weights is None else weights[idx]
            grads, u = descent_direction(net, link, data.xs[idx], targets[idx], w_batch)
            if not full_batch:
                u = net.forward_batch(data.xs)
            costs[t] = mean_cost(link, u, targets, weights)
            if not np.isfinite(costs[t]):
                logger.error(f"Failed to train {link.spec()}: non-finite cost at iteration {t}")
                raise NonFiniteCostError(t)
            norms[t] = grads.norm()
            optimizer.step(net, grads)
            if (t + 1) % PROGRESS_EVERY == 0:
                logger.debug(f"{link.spec()} iteration {t + 1}: cost={costs[t]:.6g}")

        logger.info(f"Trained {link.spec()} conditional expectation on {len(data)} pairs, final cost {costs[-1]:.6g}")
        return TrainedEstimator(net, link, config.model_dump(), costs, norms)

    # ------------------------------------------------------------------
    # Likelihood ratios
    # ------------------------------------------------------------------

    def train_likelihood_ratio(
        self,
        xs_g: np.ndarray,
        xs_f: np.ndarray,
        link: LinkFamily,
        net0: ShallowNet,
        config: OptimizerConfig,
        mode: str = "gd",
        weights_g: Optional[np.ndarray] = None,
    ) -> TrainedEstimator:
        """
        Fit omega(u(X)) to f(X) / (w(X) g(X)) from samples of g and f.

        Minimises mean_g[w phi(u)] + mean_f[psi(u)]. With B1 at a = 0 the raw output
        u(X) estimates log(f(X) / g(X)).

        Args:
            xs_g: Samples of g, shape (n_g,) or (n_g, d)
            xs_f: Samples of f, shape (n_f,) or (n_f, d)
            link: Link family
            net0: Initial network
            config: Optimizer settings (the schedule fields are ignored)
            mode: ``gd``, ``labeled-sgd`` or ``paired-sgd``
            weights_g: Optional positive weights on the g-side phi term

        Raises:
            EmptyDatasetError: If either sample set is empty
            SizeMismatchError: If paired-sgd is requested with unequal sizes
        """
        xs_g = np.asarray(xs_g, dtype=float)
        xs_f = np.asarray(xs_f, dtype=float)
        xs_g = xs_g[:, None] if xs_g.ndim == 1 else xs_g
        xs_f = xs_f[:, None] if xs_f.ndim == 1 else xs_f
        n_g, n_f = xs_g.shape[0], xs_f.shape[0]
        if n_g == 0 or n_f == 0:
            raise EmptyDatasetError(f"likelihood ratio needs samples from both laws, got n_g={n_g} n_f={n_f}")
        if xs_g.shape[1] != xs_f.shape[1]:
            raise ShapeError(f"sample dimensions differ: {xs_g.shape[1]} and {xs_f.shape[1]}")
        if mode == "paired-sgd" and n_g != n_f:
            raise SizeMismatchError(f"paired-sgd requires equal sample sizes, got n_g={n_g} n_f={n_f}")
        if mode not in ("gd", "labeled-sgd", "paired-sgd"):
            raise ValueError(f"unknown likelihood-ratio mode '{mode}'")
        w_g = np.ones(n_g) if weights_g is None else np.asarray(weights_g, dtype=float).reshape(-1)
        if w_g.shape[0] != n_g:
            raise ShapeError(f"{w_g.shape[0]} weights for {n_g} g-samples")

        net = net0.copy()
        optimizer = PowerNormOptimizer(PowerNormState.from_config(config))
        xs_all = np.vstack([xs_g, xs_f])
        from_g = np.concatenate([np.ones(n_g, dtype=bool), np.zeros(n_f, dtype=bool)])
        weight_all = np.concatenate([w_g, np.ones(n_f)])
        if mode == "gd":
            norm_all = np.concatenate([np.full(n_g, 1.0 / n_g), np.full(n_f, 1.0 / n_f)])
        else:
            norm_all = np.ones(n_g + n_f)
        stream = self.streams.stream("lr-mix").permutation(n_g + n_f) if mode == "labeled-sgd" else None

        costs = np.empty(config.iters)
        norms = np.empty(config.iters)
        for t in range(config.iters):
            if mode == "gd":
                idx = np.arange(n_g + n_f)
            elif mode == "labeled-sgd":
                idx = stream[[t % (n_g + n_f)]]
            else:
                i = t % n_g
                idx = np.array([i, n_g + i])

            u_all = net.forward_batch(xs_all)
            u = u_all[idx]
            rho = link.rho(u)
            coeffs = np.where(from_g[idx], -weight_all[idx] * link.omega(u) * rho, rho) * norm_all[idx]
            grads = net.weighted_grad(xs_all[idx], coeffs)

            costs[t] = float(np.mean(w_g * link.phi(u_all[:n_g])) + np.mean(link.psi(u_all[n_g:])))
            if not np.isfinite(costs[t]):
                logger.error(f"Failed to train {link.spec()} likelihood ratio: non-finite cost at iteration {t}")
                raise NonFiniteCostError(t)
            norms[t] = grads.norm()
            optimizer.step(net, grads)
            if (t + 1) % PROGRESS_EVERY == 0:
                logger.debug(f"{link.spec()} ratio iteration {t + 1}: cost={costs[t]:.6g}")

        logger.info(f"Trained {link.spec()} likelihood ratio ({mode}) on {n_g}+{n_f} samples, final cost {costs[-1]:.6g}")
        snapshot = dict(config.model_dump(), ratio_mode=mode)
        return TrainedEstimator(net, link, snapshot, costs, norms)

    def train_cond_density_ratio(
        self,
        data_g: PairedDataset,
        data_f: PairedDataset,
        link_marginal: LinkFamily,
        link_joint: LinkFamily,
        net_marginal: ShallowNet,
        net_joint: ShallowNet,
        config: OptimizerConfig,
        mode: str = "gd",
    ) -> TrainedEstimator:
        """
        Two-stage fit of f(Y | X) / g(Y | X).

        Stage one estimates L(X) = f(X) / g(X) on the X-marginals. Stage two fits the
        joint ratio on (Y, X) with the g-side phi term weighted by L(X_i), so that
        omega(u(Y, X)) estimates the conditional ratio. The stage-one estimator is
        returned under ``components["marginal"]``.
        """
        marginal = self.train_likelihood_ratio(data_g.xs, data_f.xs, link_marginal, net_marginal, config, mode)
        weights = marginal.predict_batch(data_g.xs)
        bad = ~np.isfinite(weights)
        if bad.any():
            warnings.warn(
                f"{int(bad.sum())} stage-one ratio estimates are not finite; those samples get zero weight",
                NonFiniteRatioWarning,
                stacklevel=2,
            )
            weights = np.where(bad, 0.0, weights)

        joint = self.train_likelihood_ratio(
            data_g.joint(), data_f.joint(), link_joint, net_joint, config, mode, weights_g=weights
        )
        joint.components["marginal"] = marginal
        logger.info(f"Trained conditional density ratio ({link_marginal.spec()} then {link_joint.spec()})")
        return joint

    # ------------------------------------------------------------------
    # Fixed points of conditional-expectation systems
    # ------------------------------------------------------------------

    def train_fixed_point(
        self,
        datasets: Sequence[PairedDataset],
        targets: Sequence[TargetFn],
        links: Sequence[LinkFamily],
        nets: Sequence[ShallowNet],
        config: OptimizerConfig,
        target_interval: Optional[Tuple[float, float]] = None,
        strict_range: Optional[bool] = None,
    ) -> List[TrainedEstimator]:
        """
        Train K networks so that omega_j(u_j(X)) = E[h_j(Y, U_1(Y), ..., U_K(Y)) | X]
        under the j-th transition law.

        Every target is recomputed from the parameters of the previous iteration. In
        full-batch and mini-batch modes all K networks move in parallel; in
        single-sample mode a seeded mixed stream of labelled pairs is processed and
        only the network of the current label moves.

        Args:
            datasets: Per-network pairs (Y = successor state, X = state)
            targets: Per-network target maps h_j
            links: Per-network link families
            nets: Per-network initial networks (left untouched)
            config: Optimizer and schedule settings
            target_interval: Analytic bounds of the targets, checked against each link's closure

        Returns:
            List[TrainedEstimator]: One estimator per network
        """
        k = len(datasets)
        if not (len(targets) == len(links) == len(nets) == k) or k == 0:
            raise ShapeError(f"need one target, link and network per dataset, got {k} datasets")
        if target_interval is not None:
            for link in links:
                self._check_interval(link, target_interval, strict_range)

        current = [net.copy() for net in nets]
        optimizers = [PowerNormOptimizer(PowerNormState.from_config(config)) for _ in range(k)]
        costs = np.empty((k, config.iters))
        norms = np.zeros((k, config.iters))

        single = config.mode == "single-sample"
        if single:
            labels = np.concatenate([np.full(len(data), j) for j, data in enumerate(datasets)])
            positions = np.concatenate([np.arange(len(data)) for data in datasets])
            stream = self.streams.stream("fixed-point-mix").permutation(labels.size)
        orders = [EpochOrder(len(data), config.shuffle, self.streams.stream(f"epoch-order-{j}")) for j, data in enumerate(datasets)]

        def fitted_targets(j: int, ys: np.ndarray) -> np.ndarray:
            estimates = [links[l].omega(current[l].forward_batch(ys)) for l in range(k)]
            return np.asarray(targets[j](ys[:, 0] if ys.shape[1] == 1 else ys, estimates), dtype=float)

        for t in range(config.iters):
            full_targets = [fitted_targets(j, data.ys) for j, data in enumerate(datasets)]
            pending = []
            for j, data in enumerate(datasets):
                u = current[j].forward_batch(data.xs)
                costs[j, t] = mean_cost(links[j], u, full_targets[j])
                if not np.isfinite(costs[j, t]):
                    logger.error(f"Failed to train network {j + 1}: non-finite cost at iteration {t}")
                    raise NonFiniteCostError(t)

            if single:
                pick = stream[t % stream.size]
                j, i = int(labels[pick]), np.array([positions[pick]])
                grads, _ = descent_direction(current[j], links[j], datasets[j].xs[i], full_targets[j][i])
                pending.append((j, grads))
            else:
                for j, data in enumerate(datasets):
                    idx = orders[j].indices(config, t)
                    grads, _ = descent_direction(current[j], links[j], data.xs[idx], full_targets[j][idx])
                    pending.append((j, grads))

            for j, grads in pending:
                norms[j, t] = grads.norm()
                optimizers[j].step(current[j], grads)
            if (t + 1) % PROGRESS_EVERY == 0:
                logger.debug(f"fixed-point iteration {t + 1}: costs={np.round(costs[:, t], 6).tolist()}")

        logger.info(
            f"Trained {k} fixed-point network(s) ({', '.join(l.spec() for l in links)}), "
            f"final costs {np.round(costs[:, -1], 6).tolist()}"
        )
        return [
            TrainedEstimator(current[j], links[j], config.model_dump(), costs[j], norms[j])
            for j in range(k)
        ]
