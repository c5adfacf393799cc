"""
Pydantic schemas for Markov dynamics, optimal stopping and reinforcement learning problems.
"""

import math
from typing import Callable, List

import numpy as np
from pydantic import BaseModel, Field
from scipy import special, stats

from app.exceptions import NonStationaryError

StateFunction = Callable[[np.ndarray], np.ndarray]


class Ar1Model(BaseModel):
    """AR(1) dynamics X_t = r X_{t-1} + m + sqrt(s) W_t with W_t standard normal."""

    r: float = Field(..., description="AR coefficient")
    m: float = Field(0.0, description="Drift")
    s: float = Field(..., gt=0, description="Innovation variance")

    model_config = {"frozen": True}

    @property
    def is_stationary(self) -> bool:
        return abs(self.r) < 1.0

    def _require_stationary(self) -> None:
        if not self.is_stationary:
            raise NonStationaryError(f"AR(1) with r={self.r} has no stationary law")

    @property
    def stationary_mean(self) -> float:
        self._require_stationary()
        return self.m / (1.0 - self.r)

    @property
    def stationary_var(self) -> float:
        self._require_stationary()
        return self.s / (1.0 - self.r**2)

    def next_state(self, x, w):
        return self.r * np.asarray(x, dtype=float) + self.m + math.sqrt(self.s) * np.asarray(w, dtype=float)

    def cond_mean(self, x):
        return self.r * np.asarray(x, dtype=float) + self.m

    def cond_cdf(self, y, x):
        """P(X_t <= y | X_{t-1} = x), broadcasting over y and x."""
        z = (np.asarray(y, dtype=float) - self.cond_mean(x)) / math.sqrt(self.s)
        return special.ndtr(z)

    def cond_pdf(self, y, x):
        return stats.norm.pdf(np.asarray(y, dtype=float), loc=self.cond_mean(x), scale=math.sqrt(self.s))


class StoppingSpec(BaseModel):
    """Markov optimal stopping with stopping cost p, sampling cost q and discount alpha."""

    dynamics: Ar1Model
    p_fn: StateFunction = Field(..., description="Stopping cost p(X)")
    q_fn: StateFunction = Field(..., description="Sampling cost q(X)")
    alpha: float = Field(1.0, ge=0, le=1, description="Discount factor")

    model_config = {"frozen": True}


class RlSpec(BaseModel):
    """K-action control problem; action j moves the state with ``actions[j - 1]``."""

    actions: List[Ar1Model] = Field(..., min_length=1)
    reward_fn: StateFunction = Field(..., description="Reward R(S)")
    gamma: float = Field(0.8, ge=0, lt=1, description="Discount factor")

    model_config = {"frozen": True}

    @property
    def num_actions(self) -> int:
        return len(self.actions)
