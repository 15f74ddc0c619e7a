"""Exception types shared across the package."""


class ParameterError(ValueError):
    """Invalid argument or configuration value."""


class FormatError(ValueError):
    """A file does not follow the expected container layout."""


class LengthError(FormatError):
    """A file is shorter than its header declares."""


class DataError(ValueError):
    """Parsed data violates a domain constraint (e.g. label outside 0..9)."""


class DivergenceError(FloatingPointError):
    """Numerical integration or optimization produced NaN/Inf."""
