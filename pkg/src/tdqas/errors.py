"""Exception hierarchy. Each class maps to a CLI exit code."""

from __future__ import annotations


class TdqasError(Exception):
    exit_code = 1


class ConfigError(TdqasError, ValueError):
    exit_code = 2


class BuildError(TdqasError):
    """Raised while constructing the operator set, basis or overlap matrices."""

    exit_code = 3


class NumericalError(TdqasError, ArithmeticError):
    exit_code = 4


class PauliLabelError(ConfigError):
    pass


class DimensionMismatch(BuildError, ValueError):
    pass
