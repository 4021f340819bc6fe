"""Exception types shared across the toolkit."""


class NumsimError(Exception):
    """Base class for all toolkit errors."""


class DegenerateInputError(NumsimError, ValueError):
    """Input is structurally valid but carries no usable signal
    (all-zero grid, zero variance, all-equal predictions)."""


class InsufficientDataError(NumsimError, ValueError):
    """Too few usable observations to compute the requested statistic."""


class MissingDataError(NumsimError, ValueError):
    """Required entries are absent (e.g. a pair with neither order rated)."""

    def __init__(self, message, pairs=None):
        super().__init__(message)
        self.pairs = list(pairs) if pairs is not None else []


class GridParseError(NumsimError, ValueError):
    """A grid or report file could not be parsed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ResidualFormatError(NumsimError, ValueError):
    """A residual dataset file violates the binary format."""


class TrainingDivergedError(NumsimError, RuntimeError):
    """Probe training produced a non-finite loss."""

    def __init__(self, step, loss):
        super().__init__(f"non-finite loss {loss!r} at step {step}")
        self.step = step
