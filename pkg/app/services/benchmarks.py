"""
Benchmark conditional-expectation models with closed-form answers.

Example (a): Y = sign(X) X^2 + W, E[Y | X] = sign(X) X^2.
Example (b): Y = 1{-1 <= X + W <= 1}, E[Y | X] = Phi((1 - X)/sigma) - Phi((-1 - X)/sigma).

In both X ~ N(0, 1) and W ~ N(0, s) with s = 0.1.
"""

import math

import numpy as np
from scipy import special, stats

from app.models.dataset import PairedDataset

NOISE_VAR = 0.1


def sample_example_a(n: int, rng: np.random.Generator, s: float = NOISE_VAR) -> PairedDataset:
    xs = rng.standard_normal(n)
    ws = math.sqrt(s) * rng.standard_normal(n)
    return PairedDataset(np.sign(xs) * xs**2 + ws, xs)


def sample_example_b(n: int, rng: np.random.Generator, s: float = NOISE_VAR) -> PairedDataset:
    xs = rng.standard_normal(n)
    ws = math.sqrt(s) * rng.standard_normal(n)
    shifted = xs + ws
    return PairedDataset(((shifted >= -1.0) & (shifted <= 1.0)).astype(float), xs)


def exact_example_a(x):
    x = np.asarray(x, dtype=float)
    return np.sign(x) * x**2


def exact_example_b(x, s: float = NOISE_VAR):
    x = np.asarray(x, dtype=float)
    sigma = math.sqrt(s)
    return special.ndtr((1.0 - x) / sigma) - special.ndtr((-1.0 - x) / sigma)


def cond_cdf_example_a(y, x, s: float = NOISE_VAR):
    return special.ndtr((np.asarray(y, dtype=float) - exact_example_a(x)) / math.sqrt(s))


def cond_pdf_example_a(y, x, s: float = NOISE_VAR):
    return stats.norm.pdf(np.asarray(y, dtype=float), loc=exact_example_a(x), scale=math.sqrt(s))


def cond_cdf_example_b(y, x, s: float = NOISE_VAR):
    """CDF of the indicator Y given X: jumps of 1 - p at 0 and p at 1."""
    y = np.asarray(y, dtype=float)
    inside = exact_example_b(x, s)
    return np.where(y < 0.0, 0.0, np.where(y < 1.0, 1.0 - inside, 1.0))


def identity(y):
    return np.asarray(y, dtype=float)
