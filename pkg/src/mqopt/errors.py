"""Exception types raised across mqopt."""

from __future__ import annotations


class MqoError(Exception):
    """Base class for every error mqopt raises on purpose."""


class PreconditionError(MqoError, ValueError):
    pass


class NormalizationError(MqoError, ValueError):
    pass


class SizeGuardError(MqoError, ValueError):
    pass


class DomainError(MqoError, ValueError):
    pass


class ConfigError(MqoError, ValueError):
    pass


class WorkloadError(MqoError, ValueError):
    """Invalid workload; ``path`` is a JSON path such as ``$.queries[1].relations``."""

    def __init__(self, message: str, *, path: str = "$") -> None:
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


class MissingCostError(MqoError, KeyError):
    """A fixture cost model has no price for something the DP needs."""

    def __init__(self, node: str, what: str) -> None:
        super().__init__(f"no {what} cost for node {node}")
        self.node = node
        self.what = what

    def __str__(self) -> str:
        return f"no {self.what} cost for node {self.node}"
