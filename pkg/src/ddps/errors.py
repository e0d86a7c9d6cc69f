"""Exception types shared across the package."""


class GraphError(ValueError):
    """Malformed graph input or a graph that violates strong connectivity."""


class ConfigError(ValueError):
    """Invalid run configuration. ``line`` is set when parsing a file."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericalAbort(FloatingPointError):
    """A run produced non-finite state or an invalid numerical fit."""
