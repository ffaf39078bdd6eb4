"""Exception hierarchy shared by the library and the CLI."""

from __future__ import annotations


class KaonBellError(Exception):
    """Base class for all errors raised by kaonbell."""


class DomainError(KaonBellError, ValueError):
    """An input lies outside the domain of an operation."""


class UnsupportedCombinationError(KaonBellError, ValueError):
    """A channel pair has no implemented joint-probability formula."""


class UnphysicalParameterError(KaonBellError, ValueError):
    """Parameters yield a probability outside [0, 1]."""


class UnknownSettingError(KaonBellError, KeyError):
    """A measurement setting is not declared in a hidden-variable model."""


class ConfigError(KaonBellError, ValueError):
    """A run configuration failed strict validation."""


class ModelFormatError(KaonBellError, ValueError):
    """A serialized model file is malformed."""
