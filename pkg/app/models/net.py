"""
Shallow single-hidden-layer ReLU network with manual forward and gradient passes.
"""

import math
from typing import Optional

import numpy as np

from app.exceptions import ShapeError
from app.models.base import ParameterSet


class GradientSet(ParameterSet):
    """Gradient accumulator with one block per network parameter block."""

    def __init__(self, w_in: np.ndarray, b_in: np.ndarray, w_out: np.ndarray, b_out: float):
        self.w_in = np.asarray(w_in, dtype=float)
        self.b_in = np.asarray(b_in, dtype=float)
        self.w_out = np.asarray(w_out, dtype=float)
        self.b_out = float(b_out)

    @classmethod
    def zeros_like(cls, net: "ShallowNet") -> "GradientSet":
        return cls(np.zeros_like(net.w_in), np.zeros_like(net.b_in), np.zeros_like(net.w_out), 0.0)

    def __add__(self, other: "GradientSet") -> "GradientSet":
        if not self.same_shape(other):
            raise ShapeError(f"cannot add gradients of shapes {self.shapes()} and {other.shapes()}")
        return GradientSet(
            self.w_in + other.w_in,
            self.b_in + other.b_in,
            self.w_out + other.w_out,
            self.b_out + other.b_out,
        )

    def scaled(self, factor: float) -> "GradientSet":
        return GradientSet(self.w_in * factor, self.b_in * factor, self.w_out * factor, self.b_out * factor)

    def norm(self) -> float:
        """Euclidean norm over all blocks."""
        return float(np.linalg.norm(self.flat()))


class ShallowNet(ParameterSet):
    """
    u(x) = b_out + w_out . relu(w_in x + b_in)

    Attributes:
        w_in: (L, d) hidden weights
        b_in: (L,) hidden biases
        w_out: (L,) output weights
        b_out: output bias
        seed: seed used at initialisation, if any
    """

    def __init__(
        self,
        w_in: np.ndarray,
        b_in: np.ndarray,
        w_out: np.ndarray,
        b_out: float = 0.0,
        seed: Optional[int] = None,
    ):
        w_in = np.atleast_2d(np.asarray(w_in, dtype=float))
        b_in = np.asarray(b_in, dtype=float).reshape(-1)
        w_out = np.asarray(w_out, dtype=float).reshape(-1)
        hidden = w_in.shape[0]
        if b_in.shape != (hidden,) or w_out.shape != (hidden,):
            raise ShapeError(
                f"inconsistent network blocks: w_in {w_in.shape}, b_in {b_in.shape}, w_out {w_out.shape}"
            )
        self.w_in = w_in
        self.b_in = b_in
        self.w_out = w_out
        self.b_out = float(b_out)
        self.seed = seed

    @classmethod
    def init(cls, hidden: int, dim: int, seed: int) -> "ShallowNet":
        """
        Random network: w_in and w_out i.i.d. N(0, 1/L), biases zero.

        Args:
            hidden: Hidden layer size L
            dim: Input dimension d
            seed: Seed of the initialisation stream

        Returns:
            ShallowNet: Fresh network, deterministic given the seed
        """
        if hidden < 1 or dim < 1:
            raise ShapeError(f"hidden and dim must be >= 1, got L={hidden} d={dim}")
        rng = np.random.Generator(np.random.PCG64(seed))
        scale = 1.0 / math.sqrt(hidden)
        w_in = rng.standard_normal((hidden, dim)) * scale
        w_out = rng.standard_normal(hidden) * scale
        return cls(w_in, np.zeros(hidden), w_out, 0.0, seed=seed)

    @property
    def hidden(self) -> int:
        return self.w_in.shape[0]

    @property
    def dim(self) -> int:
        return self.w_in.shape[1]

    def copy(self) -> "ShallowNet":
        return ShallowNet(self.w_in.copy(), self.b_in.copy(), self.w_out.copy(), self.b_out, seed=self.seed)

    def _as_batch(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        if xs.ndim == 1 and self.dim == 1:
            xs = xs[:, None]
        if xs.ndim != 2 or xs.shape[1] != self.dim:
            raise ShapeError(f"expected inputs of dimension {self.dim}, got shape {xs.shape}")
        return xs

    def forward(self, x) -> float:
        """Network output at a single input vector (a bare float is accepted when d = 1)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.dim,):
            raise ShapeError(f"expected an input of dimension {self.dim}, got shape {x.shape}")
        return float(self.forward_batch(x[None, :])[0])

    def forward_batch(self, xs: np.ndarray) -> np.ndarray:
        """Outputs for an (n, d) batch; a 1-d array is read as n scalar inputs when d = 1."""
        xs = self._as_batch(xs)
        hidden = np.maximum(xs @ self.w_in.T + self.b_in, 0.0)
        return hidden @ self.w_out + self.b_out

    def weighted_grad(self, xs: np.ndarray, coeffs: np.ndarray) -> GradientSet:
        """
        Sum over the batch of coeffs[i] * grad_theta u(xs[i]).

        The ReLU derivative at exactly zero is taken as zero.

        Raises:
            ShapeError: If the batch and coefficient lengths differ
        """
        xs = self._as_batch(xs)
        coeffs = np.asarray(coeffs, dtype=float).reshape(-1)
        if coeffs.shape[0] != xs.shape[0]:
            raise ShapeError(f"{xs.shape[0]} inputs but {coeffs.shape[0]} coefficients")

        pre = xs @ self.w_in.T + self.b_in
        hidden = np.maximum(pre, 0.0)
        active = (pre > 0.0).astype(float)

        g_b_out = float(np.sum(coeffs))
        g_w_out = hidden.T @ coeffs
        back = active * coeffs[:, None] * self.w_out[None, :]
        g_b_in = back.sum(axis=0)
        g_w_in = back.T @ xs
        return GradientSet(g_w_in, g_b_in, g_w_out, g_b_out)

    def apply(self, delta_w_in, delta_b_in, delta_w_out, delta_b_out) -> None:
        """Subtract the given deltas in place."""
        self.w_in -= delta_w_in
        self.b_in -= delta_b_in
        self.w_out -= delta_w_out
        self.b_out -= float(delta_b_out)
