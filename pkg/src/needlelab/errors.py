"""Exception types shared across the package."""


class NeedleLabError(Exception):
    """Base class for all package-specific errors."""


class SchemaError(NeedleLabError):
    """A document is missing required fields or has malformed values."""


class ContiguityError(NeedleLabError):
    """Phantom layers leave a gap, overlap, or do not start at the surface."""


class RangeError(NeedleLabError):
    """A physical parameter is outside its permitted range."""


class RetractionBelowZero(NeedleLabError):
    """A commanded motion would pull the needle tip above the surface."""


class NegativeForce(NeedleLabError):
    """A force that must be non-negative was negative."""


class ShapeMismatch(NeedleLabError):
    """Array shapes do not match the network parameterization."""


class NonFiniteLoss(NeedleLabError):
    """Training produced a NaN or infinite loss."""


class DegenerateVariance(NeedleLabError):
    """Correlation is undefined because the reference signal is constant."""


class DegenerateSegment(NeedleLabError):
    """A trace segment has too few samples for a regression."""


class StageError(NeedleLabError):
    """A pipeline stage failed; carries the stage identifier."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


class ConfigHashMismatch(NeedleLabError):
    """Input artifacts were produced under different configurations."""
