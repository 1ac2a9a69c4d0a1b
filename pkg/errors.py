class AnnealedMapError(Exception):
    """Base class of every error raised by this package."""


class StructureError(AnnealedMapError):
    """The network is not a valid discrete Bayesian network."""

    def __init__(self, message: str, variable: str | None = None) -> None:
        super().__init__(message)
        self.variable = variable


class ContractError(AnnealedMapError):
    """An operation was called outside its precondition."""


class ParseError(AnnealedMapError):
    def __init__(self, line: int, column: int, message: str) -> None:
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column
        self.message = message


class ProblemError(AnnealedMapError):
    """The MAP problem does not fit its network."""


class InconsistentEvidenceError(AnnealedMapError):
    """The evidence has probability zero."""


class OracleCapError(AnnealedMapError):
    def __init__(self, size: int, cap: int) -> None:
        super().__init__(
            f"exhaustive search needs {size} candidates, above the cap of {cap}"
        )
        self.size = size
        self.cap = cap


class ProbabilityDriftError(AnnealedMapError):
    """The tracked log-probability no longer matches exact inference."""
