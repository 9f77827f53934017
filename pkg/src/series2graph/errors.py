"""Exception hierarchy shared across the package."""


class S2GError(Exception):
    """Base class for all errors raised by this package."""


class ConstantSequenceError(S2GError):
    """A sequence has zero variance where a non-constant one is required."""


class InputTooShortError(S2GError):
    """An input series is shorter than the configured subsequence length."""


class QueryTooShortError(S2GError):
    """A query length is smaller than the length the graph was built with."""


class DegenerateRankError(S2GError):
    """The projected data cannot support the requested principal basis."""

    def __init__(self, component_index: int, message: str | None = None):
        self.component_index = component_index
        super().__init__(
            message or f"degenerate rank: component {component_index} has no variance"
        )


class DegenerateBandwidthError(S2GError):
    """A radius set is too small or too concentrated for a KDE bandwidth."""


class EmptyProjectionError(S2GError):
    """The projected trajectory never crosses any ray with positive radius."""


class PlacementError(S2GError):
    """Anomaly windows could not be placed under the spacing constraints."""


class ParseError(S2GError):
    """A data file line could not be parsed."""

    def __init__(self, path, line_number: int, message: str):
        self.path = path
        self.line_number = line_number
        super().__init__(f"{path}:{line_number}: {message}")
