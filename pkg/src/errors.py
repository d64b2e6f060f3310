"""Exception hierarchy shared by the library and the CLI.

Each class carries the process exit code ``src.main`` maps it to.
"""

from typing import Optional


class GraphFilterError(Exception):
    exit_code = 1


class UsageError(GraphFilterError):
    exit_code = 2


class DataError(GraphFilterError):
    exit_code = 3


class SamplingError(DataError):
    """Raised when a candidate pool is empty. ``pool`` names which one."""

    def __init__(self, message: str, pool: Optional[str] = None):
        super().__init__(message)
        self.pool = pool


class UndefinedMetricError(DataError):
    pass


class ContractError(GraphFilterError):
    exit_code = 3


class DimensionError(ContractError):
    pass


class DomainError(ContractError):
    pass


class NumericError(GraphFilterError):
    exit_code = 4


class ScoringError(GraphFilterError):
    exit_code = 3


class CollocationError(GraphFilterError):
    exit_code = 3

    def __init__(self, message: str, failures: dict, partial: dict):
        super().__init__(message)
        self.failures = failures
        self.partial = partial
