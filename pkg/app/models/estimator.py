"""
Trained estimator: a network paired with the link that maps its raw output.
"""

from dataclasses import dataclass, field
from typing import Any, Dict

import numpy as np

from app.models.links import LinkFamily
from app.models.net import ShallowNet


@dataclass
class TrainedEstimator:
    """
    Result of a training run.

    ``predict`` returns omega(u(x)), which lies in the closure of the link range for
    any parameters. ``predict_raw`` returns u(x) itself on a batch (the log-ratio for B1 at a = 0).
    """

    net: ShallowNet
    link: LinkFamily
    train_config: Dict[str, Any] = field(default_factory=dict)
    cost_history: np.ndarray = field(default_factory=lambda: np.zeros(0))
    grad_norm_history: np.ndarray = field(default_factory=lambda: np.zeros(0))
    components: Dict[str, "TrainedEstimator"] = field(default_factory=dict)

    @property
    def final_cost(self) -> float:
        return float(self.cost_history[-1]) if self.cost_history.size else float("nan")

    def predict(self, x) -> float:
        return float(self.link.omega(self.net.forward(x)))

    def predict_batch(self, xs: np.ndarray) -> np.ndarray:
        return np.asarray(self.link.omega(self.net.forward_batch(xs)), dtype=float)

    def predict_raw(self, xs: np.ndarray) -> np.ndarray:
        return self.net.forward_batch(xs)

    def __repr__(self) -> str:
        return (
            f"<TrainedEstimator(link={self.link.spec()}, L={self.net.hidden}, "
            f"iters={self.cost_history.size}, final_cost={self.final_cost:.6g})>"
        )
