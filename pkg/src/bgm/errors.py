"""Exception types shared across the package."""


class BgmError(Exception):
    """Base class for all library errors."""


class InvalidInputError(BgmError):
    """Caller supplied data or configuration that violates a precondition."""


class ParseError(InvalidInputError):
    """Dataset file could not be parsed; carries the offending line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class TrainingFailureError(BgmError):
    """Classifier training diverged; carries the offending epoch."""

    def __init__(self, message, epoch=None):
        if epoch is not None:
            message = f"epoch {epoch}: {message}"
        super().__init__(message)
        self.epoch = epoch


class SamplerError(BgmError):
    """MCMC sampling could not start or proceed."""


class EstimationFailureError(BgmError):
    """A Monte Carlo estimator produced no usable weight mass."""


class InternalConsistencyError(BgmError):
    """An internal invariant was violated; indicates a bug, not bad input."""
