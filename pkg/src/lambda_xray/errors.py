"""Exception types raised by lambda_xray."""


class LambdaXrayError(Exception):
    """Base class for all package errors."""


class ConfigError(LambdaXrayError, ValueError):
    """Invalid experiment configuration (bad syntax, unknown key, violated invariant)."""

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key!r}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)


class ChartError(LambdaXrayError, ValueError):
    """A curve left the coordinate chart on which its family is defined."""


class NumericalError(LambdaXrayError, RuntimeError):
    """Non-finite values, degenerate geometry or a diverging iteration."""


class GridFormatError(LambdaXrayError, ValueError):
    """Malformed GFD1 grid file."""
