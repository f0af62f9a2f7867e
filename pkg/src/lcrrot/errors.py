"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Operand shapes are incompatible with the requested operation."""


class DomainError(ValueError):
    """Input is outside the mathematical domain of the operation."""


class FormatError(ValueError):
    """A text input (corpus, embedding file, ...) violates its format."""


class ConfigError(ValueError):
    """Model variant and parameters disagree, or a run config is invalid."""


class CheckpointError(ValueError):
    """A checkpoint file cannot be loaded (bad version, variant mismatch)."""
