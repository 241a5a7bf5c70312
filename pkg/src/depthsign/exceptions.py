"""Exception types raised across the package."""


class ShapeError(ValueError):
    """Operand shapes do not conform."""


class ParameterError(ValueError):
    """A hyperparameter or argument is outside its valid domain."""


class ManifestError(ValueError):
    """A dataset manifest line is malformed or references an invalid label."""


class FormatError(ValueError):
    """A file does not follow its expected binary or text layout."""


class UndefinedMetricError(ValueError):
    """A metric's denominator is zero for the given counts."""


class DivergenceError(ArithmeticError):
    """Training produced a non-finite objective value."""

    def __init__(self, epoch, learning_rate, stage=None):
        self.epoch = epoch
        self.learning_rate = learning_rate
        self.stage = stage
        where = f"{stage}: " if stage else ""
        super().__init__(
            f"{where}objective became non-finite at epoch {epoch} "
            f"(learning_rate={learning_rate})"
        )

    def with_stage(self, stage):
        return DivergenceError(self.epoch, self.learning_rate, stage)
