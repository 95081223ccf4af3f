"""Exception types shared across the library."""


class DynlinkError(Exception):
    """Base class for all library-specific errors."""


class EdgeListParseError(DynlinkError):
    """A record in an edge-list file could not be parsed."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class EmptyInputError(DynlinkError):
    """An input that must contain at least one record is empty."""


class DegenerateSpanError(DynlinkError):
    """A time span too degenerate for the requested discretization."""


class SplitError(DynlinkError):
    """The sequence is too short for the requested train/test split."""


class EmptySupportError(DynlinkError):
    """A sampling distribution has empty support."""


class RegimeUnavailableError(DynlinkError):
    """An evaluation regime's required edge set is empty at this step."""

    def __init__(self, regime: str, step: int, detail: str):
        super().__init__(f"regime {regime!r} unavailable at step {step}: {detail}")
        self.regime = regime
        self.step = step


class UndefinedMetricError(DynlinkError):
    """A metric is undefined for the given inputs (e.g. one class only)."""


class DegenerateTestError(DynlinkError):
    """A statistical test is degenerate (e.g. zero-variance differences)."""


class ImpossibleRewireError(DynlinkError):
    """A randomization cannot produce a simple graph with the requested size."""


class NumericError(DynlinkError):
    """Training produced a non-finite loss; carries a diagnostic snapshot."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
