"""Shared exception hierarchy.

Config/usage mistakes raise ConfigError (CLI exit code 1); bad or
inconsistent input data raises DataError (CLI exit code 2).
"""


class RelplanError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(RelplanError):
    """Invalid configuration or parameters."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class DataError(RelplanError):
    """Input data violates a schema or references unknown entities."""
