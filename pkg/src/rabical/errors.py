"""Exception hierarchy shared by the library and the CLI exit-code map."""

from __future__ import annotations


class RabicalError(Exception):
    """Base class; carries the CLI exit code for its category."""

    exit_code = 1


class ConfigError(RabicalError):
    """Invalid configuration: bad values, unknown presets, unusable paths."""

    exit_code = 2


class MissingArtifactError(RabicalError):
    """A pipeline stage's input artifact file does not exist."""

    exit_code = 3


class NumericalError(RabicalError):
    """A computation produced no usable result."""

    exit_code = 4


class AllFitsExcludedError(NumericalError):
    """Every per-amplitude fit was rejected; no curve can be extracted."""
