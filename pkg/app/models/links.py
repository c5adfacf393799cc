"""
Link families (omega, rho, phi, psi) and their ranges.

For each family omega is strictly increasing and rho strictly negative; phi and psi
are defined through phi' = -omega*rho and psi' = rho, so that the scalar cost
phi(u) + r*psi(u) is minimised exactly where omega(u) = r. Training updates use
only omega and rho; phi and psi serve cost monitoring.
"""

import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from scipy import optimize, special

from app.exceptions import ConfigError, RangeError

ArrayLike = Union[float, np.ndarray]

FAMILIES: Tuple[str, ...] = ("A1", "A2", "A3", "B1", "B2", "C1", "C2")

_BRACKET_DOUBLINGS = 200


@dataclass(frozen=True)
class RangeInterval:
    """Range of omega with extended-real endpoints."""

    lower: float
    upper: float
    lower_closed: bool = False
    upper_closed: bool = False

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ConfigError(f"empty range: lower={self.lower} upper={self.upper}")

    def contains(self, value: ArrayLike) -> np.ndarray:
        v = np.asarray(value, dtype=float)
        above = v >= self.lower if self.lower_closed else v > self.lower
        below = v <= self.upper if self.upper_closed else v < self.upper
        return above & below

    def closure_contains(self, value: ArrayLike) -> np.ndarray:
        v = np.asarray(value, dtype=float)
        return (v >= self.lower) & (v <= self.upper)

    def __str__(self) -> str:
        left = "[" if self.lower_closed else "("
        right = "]" if self.upper_closed else ")"
        return f"{left}{self.lower}, {self.upper}{right}"


def _sign(z: np.ndarray) -> np.ndarray:
    # sign(0) = 0 keeps A2/A3 continuous at the origin
    return np.sign(z)


def _softplus(z: np.ndarray) -> np.ndarray:
    """log(1 + e^z) without overflow."""
    return np.logaddexp(0.0, z)


@dataclass(frozen=True)
class LinkFamily:
    """
    One of the seven supported link families.

    Attributes:
        family_id: ``A1``..``C2``
        a: lower parameter used by B1, B2, C1, C2
        b: upper parameter used by C1, C2
    """

    family_id: str
    a: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        if self.family_id not in FAMILIES:
            raise ConfigError(f"unknown link family '{self.family_id}', expected one of {FAMILIES}")
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ConfigError(f"link parameters must be finite, got a={self.a} b={self.b}")
        if self.family_id in ("C1", "C2") and not self.a < self.b:
            raise ConfigError(f"{self.family_id} requires a < b, got a={self.a} b={self.b}")

    @classmethod
    def from_string(cls, text: str) -> "LinkFamily":
        """
        Parse ``ID[:a[:b]]``, e.g. ``A1``, ``B1:0``, ``C1:-0.01:1.01``.

        Raises:
            ConfigError: If the text is malformed
        """
        parts = text.strip().split(":")
        family_id = parts[0].upper()
        try:
            values = [float(p) for p in parts[1:]]
        except ValueError:
            raise ConfigError(f"malformed link '{text}'")
        if len(values) > 2:
            raise ConfigError(f"malformed link '{text}'")
        kwargs = dict(zip(("a", "b"), values))
        return cls(family_id, **kwargs)

    @property
    def label(self) -> str:
        """Column-friendly name: the family id alone."""
        return self.family_id

    def spec(self) -> str:
        """Round-trippable string form for manifests and checkpoints."""
        if self.family_id.startswith("A"):
            return self.family_id
        if self.family_id.startswith("B"):
            return f"{self.family_id}:{self.a!r}"
        return f"{self.family_id}:{self.a!r}:{self.b!r}"

    def range(self) -> RangeInterval:
        if self.family_id.startswith("A"):
            return RangeInterval(-math.inf, math.inf)
        if self.family_id.startswith("B"):
            return RangeInterval(self.a, math.inf)
        return RangeInterval(self.a, self.b)

    def closure_contains(self, lower: float, upper: float, rtol: float = 1e-9) -> bool:
        """True when [lower, upper] fits inside the closure of the range, up to rounding."""
        rng = self.range()
        lower_ok = lower >= rng.lower - rtol * max(1.0, abs(rng.lower)) if math.isfinite(rng.lower) else True
        upper_ok = upper <= rng.upper + rtol * max(1.0, abs(rng.upper)) if math.isfinite(rng.upper) else True
        return bool(lower_ok and upper_ok and lower <= upper)

    # ------------------------------------------------------------------
    # omega, rho, phi, psi
    # ------------------------------------------------------------------

    def omega(self, z: ArrayLike) -> ArrayLike:
        z = np.asarray(z, dtype=float)
        fid = self.family_id
        if fid == "A1":
            out = z.copy()
        elif fid == "A2":
            out = np.sinh(z)
        elif fid == "A3":
            out = _sign(z) * np.expm1(np.abs(z))
        elif fid in ("B1", "B2"):
            out = self.a + np.exp(z)
        else:
            out = self.a * special.expit(-z) + self.b * special.expit(z)
        return out[()] if out.ndim == 0 else out

    def rho(self, z: ArrayLike) -> ArrayLike:
        z = np.asarray(z, dtype=float)
        fid = self.family_id
        if fid == "A1":
            out = -np.ones_like(z)
        elif fid in ("A2", "A3"):
            out = -np.exp(-0.5 * np.abs(z))
        elif fid == "B1":
            out = -special.expit(-z)
        elif fid == "B2":
            out = -np.exp(-0.5 * z)
        elif fid == "C1":
            out = -special.expit(z)
        else:
            out = -np.exp(-z)
        return out[()] if out.ndim == 0 else out

    def phi(self, z: ArrayLike) -> ArrayLike:
        z = np.asarray(z, dtype=float)
        a, b = self.a, self.b
        fid = self.family_id
        if fid == "A1":
            out = 0.5 * z**2
        elif fid == "A2":
            az = np.abs(z)
            out = np.expm1(0.5 * az) + np.expm1(-1.5 * az) / 3.0
        elif fid == "A3":
            out = 4.0 * np.cosh(0.5 * z)
        elif fid == "B1":
            out = -a * _softplus(-z) + _softplus(z)
        elif fid == "B2":
            out = -2.0 * a * np.exp(-0.5 * z) + 2.0 * np.exp(0.5 * z)
        elif fid == "C1":
            out = (b - a) * special.expit(-z) + b * _softplus(z)
        else:
            # log(e^z / (1 + e^z)) = -softplus(-z)
            out = -(b - a) * _softplus(-z) - a * np.exp(-z)
        return out[()] if out.ndim == 0 else out

    def psi(self, z: ArrayLike) -> ArrayLike:
        z = np.asarray(z, dtype=float)
        fid = self.family_id
        if fid == "A1":
            out = -z
        elif fid in ("A2", "A3"):
            out = 2.0 * _sign(z) * np.expm1(-0.5 * np.abs(z))
        elif fid == "B1":
            out = _softplus(-z)
        elif fid == "B2":
            out = 2.0 * np.exp(-0.5 * z)
        elif fid == "C1":
            out = -_softplus(z)
        else:
            out = np.exp(-z)
        return out[()] if out.ndim == 0 else out

    def cost(self, z: ArrayLike, r: ArrayLike) -> ArrayLike:
        """Pointwise objective phi(z) + r*psi(z)."""
        return self.phi(z) + np.asarray(r, dtype=float) * self.psi(z)

    # ------------------------------------------------------------------
    # Scalar minimiser
    # ------------------------------------------------------------------

    def scalar_minimizer(self, r: float, tol: float = 1e-10) -> float:
        """
        Minimiser of phi(u) + r*psi(u), i.e. the root of omega(u) = r.

        The bracket starts at [-1, 1] and doubles until omega crosses r, then
        bisection closes in on the crossing.

        Args:
            r: Target value, strictly inside the range
            tol: Absolute tolerance on |omega(u) - r|

        Returns:
            float: u with omega(u) = r

        Raises:
            RangeError: If r is outside the range
        """
        r = float(r)
        if not (math.isfinite(r) and bool(self.range().contains(r))):
            raise RangeError(f"target {r} outside range {self.range()} of {self.family_id}")

        def gap(u: float) -> float:
            return float(self.omega(u)) - r

        lo, hi = -1.0, 1.0
        for _ in range(_BRACKET_DOUBLINGS):
            if gap(lo) <= 0.0:
                break
            lo *= 2.0
        for _ in range(_BRACKET_DOUBLINGS):
            if gap(hi) >= 0.0:
                break
            hi *= 2.0
        if gap(lo) > 0.0 or gap(hi) < 0.0:
            raise RangeError(f"could not bracket omega(u) = {r} for {self.family_id}")
        if abs(gap(lo)) <= tol:
            return lo
        if abs(gap(hi)) <= tol:
            return hi

        return float(
            optimize.bisect(gap, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)
        )

    def __str__(self) -> str:
        return self.spec()
