"""Exception types shared across the package (the CLI maps them to exit codes)."""


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


class InputFileError(OSError):
    """Missing or malformed input file (tables, layouts, configs)."""


class NumericalError(ArithmeticError):
    """A computation produced values that violate a numerical contract."""
