"""Exception types shared across the package."""

from __future__ import annotations


class RoutingError(Exception):
    """Base class for every error raised by trafficroute."""


class GraphValidationError(RoutingError):
    """Raised when node/edge input violates a graph invariant."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ImputationError(RoutingError):
    pass


class InvalidPathError(RoutingError):
    pass


class NoPath(RoutingError):
    """No route exists from ``src`` to ``dst``."""

    def __init__(self, src: int, dst: int):
        super().__init__(f"no path from {src} to {dst}")
        self.src = src
        self.dst = dst


class ArtifactError(RoutingError):
    """A preprocessed artifact is missing, corrupt or built for another graph."""


class ConfigError(RoutingError):
    pass
