"""
Seeded random streams.

A run is seeded once; every stochastic draw (network init, data, shuffles, action
sequences) comes from a substream keyed by a label, so resizing one stream never
shifts another.
"""

import zlib

import numpy as np

GENERATOR_NAME = "PCG64"
GENERATOR_VERSION = 1


class RandomStreams:
    """Factory of labelled, independent ``numpy.random.Generator`` instances."""

    def __init__(self, seed: int):
        if seed < 0:
            raise ValueError(f"seed must be non-negative, got {seed}")
        self.seed = int(seed)

    def stream(self, label: str) -> np.random.Generator:
        """Return a fresh generator for ``label``; same seed and label give the same draws."""
        key = zlib.crc32(label.encode("utf-8"))
        sequence = np.random.SeedSequence(entropy=self.seed, spawn_key=(GENERATOR_VERSION, key))
        return np.random.Generator(np.random.PCG64(sequence))

    def stream_seed(self, label: str) -> int:
        """A 32-bit integer seed derived from ``label``, recorded in checkpoints."""
        return int(self.stream(label).integers(0, 2**32 - 1))

    def describe(self) -> dict:
        return {"generator": GENERATOR_NAME, "version": GENERATOR_VERSION, "seed": self.seed}

    def __repr__(self) -> str:
        return f"<RandomStreams(seed={self.seed})>"
