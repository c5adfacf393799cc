"""
Service layer for simulating AR(1) and action-controlled trajectories.
"""

import logging
import math
from typing import Optional, Sequence, Union

import numpy as np

from app.exceptions import BadActionIndexError, MissingActionDataError, ShapeError
from app.models.dataset import PairedDataset
from app.schemas.problems import Ar1Model, RlSpec

logger = logging.getLogger(__name__)

STATIONARY = "stationary"


class SimulationService:
    """Trajectory generation driven by an explicit random generator."""

    def __init__(self, rng: np.random.Generator):
        self.rng = rng

    def _innovations(self, n: int, innovations: Optional[np.ndarray]) -> np.ndarray:
        if innovations is None:
            return self.rng.standard_normal(n)
        innovations = np.asarray(innovations, dtype=float).reshape(-1)
        if innovations.size != n:
            raise ShapeError(f"{innovations.size} innovations for {n} steps")
        return innovations

    def simulate_ar1(
        self,
        model: Ar1Model,
        n: int,
        x0: Union[float, str] = STATIONARY,
        innovations: Optional[np.ndarray] = None,
    ) -> np.ndarray:
        """
        Simulate n steps of the AR(1) recursion.

        Args:
            model: Dynamics
            n: Number of transitions
            x0: Initial state, or ``"stationary"`` to draw it from the stationary law
            innovations: Optional standard-normal draws W_1..W_n replacing random ones

        Returns:
            np.ndarray: n + 1 states

        Raises:
            NonStationaryError: If a stationary start is requested with |r| >= 1
        """
        if x0 == STATIONARY:
            start = model.stationary_mean + math.sqrt(model.stationary_var) * self.rng.standard_normal()
        else:
            start = float(x0)
        noise = self._innovations(n, innovations)
        states = np.empty(n + 1)
        states[0] = start
        for t in range(n):
            states[t + 1] = model.next_state(states[t], noise[t])
        logger.info(f"Simulated AR(1) r={model.r} m={model.m} s={model.s} for {n} steps")
        return states

    def random_actions(self, n: int, num_actions: int) -> np.ndarray:
        """Uniform action labels in 1..K."""
        return self.rng.integers(1, num_actions + 1, size=n)

    def simulate_controlled(
        self,
        spec: RlSpec,
        actions: Sequence[int],
        x0: float = 0.0,
        innovations: Optional[np.ndarray] = None,
    ) -> np.ndarray:
        """
        Apply the model indexed by ``actions[t]`` (1-based) to move from S_t to S_{t+1}.

        Raises:
            BadActionIndexError: If an action label lies outside 1..K
        """
        actions = np.asarray(actions, dtype=int).reshape(-1)
        k = spec.num_actions
        bad = np.flatnonzero((actions < 1) | (actions > k))
        if bad.size:
            raise BadActionIndexError(f"action labels must lie in 1..{k}, bad positions {bad[:10].tolist()}")
        noise = self._innovations(actions.size, innovations)
        states = np.empty(actions.size + 1)
        states[0] = float(x0)
        for t, action in enumerate(actions):
            states[t + 1] = spec.actions[action - 1].next_state(states[t], noise[t])
        logger.info(f"Simulated {actions.size} controlled transitions over {k} actions")
        return states


def transitions_from_trajectory(states: np.ndarray, actions: Optional[np.ndarray] = None) -> PairedDataset:
    """Overlapping pairs X_i = states[i], Y_i = states[i + 1], labelled by the action taken."""
    states = np.asarray(states, dtype=float).reshape(-1)
    if states.size < 2:
        raise ShapeError("a trajectory needs at least two states to form a transition")
    return PairedDataset(states[1:], states[:-1], actions)


def split_by_action(transitions: PairedDataset, num_actions: int) -> list:
    """
    Per-action datasets in label order 1..K.

    Raises:
        MissingActionDataError: If some label has no transitions
    """
    groups = transitions.by_label()
    missing = [label for label in range(1, num_actions + 1) if label not in groups]
    if missing:
        raise MissingActionDataError(missing)
    return [groups[label] for label in range(1, num_actions + 1)]
