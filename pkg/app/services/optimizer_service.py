"""
Service layer for the power-normalised gradient step and batch scheduling.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from app.exceptions import ShapeError
from app.models.net import GradientSet, ShallowNet
from app.schemas.training import OptimizerConfig

logger = logging.getLogger(__name__)


@dataclass
class PowerNormState:
    """Running per-parameter power estimates; blocks mirror the network blocks."""

    mu: float = 0.001
    lam: float = 0.99
    c: float = 0.001
    powers: Dict[str, np.ndarray] = field(default_factory=dict)
    initialized: bool = False

    @classmethod
    def from_config(cls, config: OptimizerConfig) -> "PowerNormState":
        return cls(mu=config.mu, lam=config.lam, c=config.c)


class PowerNormOptimizer:
    """Normalised gradient step: theta <- theta - mu * g / sqrt(c + powers)."""

    def __init__(self, state: PowerNormState):
        self.state = state

    def step(self, net: ShallowNet, grads: GradientSet) -> None:
        """
        Update ``net`` in place and advance the power estimates.

        The first call sets powers to g**2; later calls use
        powers <- lam * powers + (1 - lam) * g**2.

        Raises:
            ShapeError: If the gradient blocks do not match the network
        """
        if not grads.same_shape(net):
            raise ShapeError(f"gradient shapes {grads.shapes()} do not match network {net.shapes()}")
        state = self.state
        squared = grads.map(np.square)
        if not state.initialized:
            state.powers = squared
            state.initialized = True
        else:
            state.powers = {
                name: state.lam * state.powers[name] + (1.0 - state.lam) * squared[name]
                for name in squared
            }
        blocks = grads.blocks()
        deltas = {name: state.mu * blocks[name] / np.sqrt(state.c + state.powers[name]) for name in blocks}
        net.apply(deltas["w_in"], deltas["b_in"], deltas["w_out"], float(deltas["b_out"]))


def schedule(
    mode: str,
    n: int,
    t: int,
    batch_size: int = 1,
    order: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    Sample indices used at iteration ``t`` (0-based).

    Args:
        mode: ``full-batch``, ``single-sample`` or ``mini-batch``
        n: Dataset size
        t: Iteration index
        batch_size: Block size m for mini-batch mode
        order: Optional permutation of range(n) applied on top of the block indices

    Returns:
        np.ndarray: Integer indices into the dataset
    """
    if n < 1:
        raise ShapeError("schedule needs a nonempty dataset")
    if mode == "full-batch":
        idx = np.arange(n)
    elif mode == "single-sample":
        idx = np.array([t % n])
    elif mode == "mini-batch":
        if not 1 <= batch_size <= n:
            raise ShapeError(f"batch size {batch_size} outside [1, {n}]")
        idx = (t * batch_size + np.arange(batch_size)) % n
    else:
        raise ValueError(f"unknown schedule mode '{mode}'")
    return idx if order is None else order[idx]


class EpochOrder:
    """Per-epoch permutations for single-sample and mini-batch schedules."""

    def __init__(self, n: int, shuffle: bool, rng: Optional[np.random.Generator] = None):
        self.n = n
        self.shuffle = shuffle
        self.rng = rng
        self._epoch = -1
        self._order: Optional[np.ndarray] = None

    def indices(self, config: OptimizerConfig, t: int) -> np.ndarray:
        if not self.shuffle or config.mode == "full-batch":
            return schedule(config.mode, self.n, t, config.batch_size)
        per_epoch = self.n if config.mode == "single-sample" else max(1, self.n // config.batch_size)
        epoch = t // per_epoch
        if epoch != self._epoch:
            self._order = self.rng.permutation(self.n)
            self._epoch = epoch
            logger.debug(f"Reshuffled samples for epoch {epoch}")
        position = t % per_epoch
        return schedule(config.mode, self.n, position, config.batch_size, order=self._order)
