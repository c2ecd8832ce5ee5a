"""Exception hierarchy; the CLI maps each family to an exit code."""


class MMFusionError(Exception):
    exit_code = 1


class ConfigError(MMFusionError):
    exit_code = 2


class DataError(MMFusionError, ValueError):
    """Malformed or inconsistent input data (files, shapes, labels)."""

    exit_code = 3


class NumericalError(MMFusionError, ArithmeticError):
    """A numerical routine could not produce a trustworthy result."""

    exit_code = 4
