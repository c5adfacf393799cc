"""
Base model with common functionality for parameter-shaped containers.
"""

from typing import Callable, Dict, Tuple

import numpy as np


class ParameterSet:
    """
    Abstract container of named numeric blocks.

    Provides:
    - Ordered block iteration (``w_in``, ``b_in``, ``w_out``, ``b_out``)
    - Shape comparison, flattening and elementwise mapping
    """

    BLOCKS: Tuple[str, ...] = ("w_in", "b_in", "w_out", "b_out")

    def blocks(self) -> Dict[str, np.ndarray]:
        """Blocks in canonical order; scalars are returned as 0-d arrays."""
        return {name: np.asarray(getattr(self, name), dtype=float) for name in self.BLOCKS}

    def shapes(self) -> Dict[str, Tuple[int, ...]]:
        return {name: block.shape for name, block in self.blocks().items()}

    def same_shape(self, other: "ParameterSet") -> bool:
        return self.shapes() == other.shapes()

    def map(self, fn: Callable[[np.ndarray], np.ndarray]) -> Dict[str, np.ndarray]:
        """Apply ``fn`` to every block and return the results by name."""
        return {name: fn(block) for name, block in self.blocks().items()}

    def flat(self) -> np.ndarray:
        """All blocks concatenated in canonical order."""
        return np.concatenate([block.ravel() for block in self.blocks().values()])

    def __repr__(self) -> str:
        shapes = ", ".join(f"{name}={shape}" for name, shape in self.shapes().items())
        return f"<{self.__class__.__name__}({shapes})>"
