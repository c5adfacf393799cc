"""
Ordered collections of (Y, X) training pairs.
"""

from typing import Dict, Optional

import numpy as np

from app.exceptions import EmptyDatasetError, ShapeError


class PairedDataset:
    """
    Ordered (Y_i, X_i) pairs, optionally labelled with a model or action index.

    ``ys`` and ``xs`` are stored as 2-d arrays (n, dim) so that scalar and vector
    observations share one code path.
    """

    def __init__(self, ys: np.ndarray, xs: np.ndarray, labels: Optional[np.ndarray] = None):
        ys = np.asarray(ys, dtype=float)
        xs = np.asarray(xs, dtype=float)
        if ys.ndim == 1:
            ys = ys[:, None]
        if xs.ndim == 1:
            xs = xs[:, None]
        if ys.ndim != 2 or xs.ndim != 2:
            raise ShapeError(f"ys and xs must be 1-d or 2-d, got {ys.shape} and {xs.shape}")
        if ys.shape[0] == 0:
            raise EmptyDatasetError("dataset has no pairs")
        if ys.shape[0] != xs.shape[0]:
            raise ShapeError(f"{ys.shape[0]} observations but {xs.shape[0]} conditioning values")
        if labels is not None:
            labels = np.asarray(labels, dtype=int).reshape(-1)
            if labels.shape[0] != ys.shape[0]:
                raise ShapeError(f"{labels.shape[0]} labels for {ys.shape[0]} pairs")
        self.ys = ys
        self.xs = xs
        self.labels = labels

    def __len__(self) -> int:
        return self.ys.shape[0]

    @property
    def x_dim(self) -> int:
        return self.xs.shape[1]

    @property
    def y_dim(self) -> int:
        return self.ys.shape[1]

    def y_values(self) -> np.ndarray:
        """Observations flattened to 1-d when scalar."""
        return self.ys[:, 0] if self.y_dim == 1 else self.ys

    def subset(self, indices: np.ndarray) -> "PairedDataset":
        indices = np.asarray(indices, dtype=int)
        labels = None if self.labels is None else self.labels[indices]
        return PairedDataset(self.ys[indices], self.xs[indices], labels)

    def by_label(self) -> Dict[int, "PairedDataset"]:
        """Split into per-label datasets; labels with no pairs are absent."""
        if self.labels is None:
            raise ShapeError("dataset carries no labels")
        return {
            int(label): self.subset(np.flatnonzero(self.labels == label))
            for label in np.unique(self.labels)
        }

    def joint(self) -> np.ndarray:
        """Concatenated (Y, X) inputs for joint-density fits."""
        return np.hstack([self.ys, self.xs])

    def __repr__(self) -> str:
        labelled = "" if self.labels is None else ", labelled"
        return f"<PairedDataset(n={len(self)}, y_dim={self.y_dim}, x_dim={self.x_dim}{labelled})>"
