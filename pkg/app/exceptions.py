"""
Exception and warning types raised by the estimators, solvers and CLI.

Every error carries a machine-parsable ``category`` and the process exit code the
CLI uses when it reaches the top level.
"""

from typing import Iterable, List, Optional


class LinkfitError(Exception):
    """Base class for all linkfit errors."""

    category = "Error"
    exit_code = 1

    def one_line(self) -> str:
        """Render as the single stderr line printed by the CLI."""
        message = " ".join(str(self).split())
        return f"error={self.category} message={message}"


class ConfigError(LinkfitError):
    """Invalid or incomplete run configuration."""

    category = "ConfigError"
    exit_code = 2


class RangeError(LinkfitError, ValueError):
    """A scalar target lies outside the range of a link family."""

    category = "RangeError"


class RangeViolationError(LinkfitError):
    """Training targets fall outside the range of the selected link."""

    category = "RangeViolation"

    def __init__(self, indices: Iterable[int], message: Optional[str] = None):
        self.indices: List[int] = [int(i) for i in indices]
        shown = self.indices[:10]
        more = "" if len(self.indices) <= 10 else f" (+{len(self.indices) - 10} more)"
        super().__init__(message or f"targets outside link range at indices {shown}{more}")


class ShapeError(LinkfitError, ValueError):
    """Array shapes do not agree."""

    category = "ShapeError"


class NonFiniteCostError(LinkfitError):
    """The training cost became NaN or infinite."""

    category = "NonFiniteCost"

    def __init__(self, iteration: int):
        self.iteration = iteration
        super().__init__(f"non-finite cost at iteration {iteration}")


class NonFiniteIterateError(LinkfitError):
    """A fixed-point iterate became NaN or infinite."""

    category = "NonFiniteIterate"

    def __init__(self, iteration: int):
        self.iteration = iteration
        super().__init__(f"non-finite fixed-point iterate at iteration {iteration}")


class EmptyDatasetError(LinkfitError):
    category = "EmptyDataset"


class SizeMismatchError(LinkfitError):
    category = "SizeMismatch"


class NonStationaryError(LinkfitError):
    category = "NonStationary"


class BadActionIndexError(LinkfitError):
    category = "BadActionIndex"


class MissingActionDataError(LinkfitError):
    """Some action labels have no transitions."""

    category = "MissingActionData"

    def __init__(self, labels: Iterable[int]):
        self.labels = [int(label) for label in labels]
        super().__init__(f"no transitions for action labels {self.labels}")


class GridMismatchError(LinkfitError):
    category = "GridMismatch"


class CheckFailedError(LinkfitError):
    """A self-check or comparison gate did not pass."""

    category = "CheckFailed"


class TailMassError(LinkfitError):
    """Tail mass outside a quadrature grid exceeds tolerance under strict checking."""

    category = "TailMassWarning"


class TailMassWarning(UserWarning):
    """Probability mass left outside a quadrature grid exceeds tolerance."""


class RangeWarning(UserWarning):
    """Targets outside the link range, tolerated because strict checking is off."""


class NonFiniteRatioWarning(UserWarning):
    """A stage-one likelihood-ratio estimate is not finite."""
