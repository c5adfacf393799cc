"""
Pydantic schemas for quadrature grid specifications.
"""

from pydantic import BaseModel, Field, model_validator

from app.exceptions import ConfigError
from app.models.quadrature import Grid1D


class GridSpec(BaseModel):
    """Interval and point count of a one-dimensional grid."""

    lo: float = Field(..., description="Lower end of the interval")
    hi: float = Field(..., description="Upper end of the interval")
    n: int = Field(..., ge=2, description="Number of grid points")
    centered: bool = Field(False, description="Use cell midpoints instead of endpoint-inclusive spacing")

    model_config = {"frozen": True}

    @model_validator(mode="after")
    def _ordered(self):
        if not self.lo < self.hi:
            raise ValueError(f"grid interval must satisfy lo < hi, got {self.lo}:{self.hi}")
        return self

    @classmethod
    def parse(cls, text: str, centered: bool = False) -> "GridSpec":
        """Parse ``lo:hi:n``."""
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"grid must be lo:hi:n, got '{text}'")
        try:
            return cls(lo=float(parts[0]), hi=float(parts[1]), n=int(parts[2]), centered=centered)
        except ValueError as e:
            raise ConfigError(f"invalid grid '{text}': {e}")

    def to_grid(self) -> Grid1D:
        if self.centered:
            return Grid1D.cell_centered(self.lo, self.hi, self.n)
        return Grid1D.uniform(self.lo, self.hi, self.n)

    def __str__(self) -> str:
        return f"{self.lo!r}:{self.hi!r}:{self.n}"
