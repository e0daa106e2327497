class SGSpinError(Exception):
    """Base class for library errors."""


class ParameterError(SGSpinError, ValueError):
    """Invalid physical or numerical parameter."""


class GridError(SGSpinError, ValueError):
    """Grid unsuitable for the requested operation (too thin, too small)."""


class GateError(SGSpinError, RuntimeError):
    """A numerical validity gate failed (non-relativistic limit, step size,
    packet margin, lump separation)."""


class ConfigError(SGSpinError, ValueError):
    """Bad scenario configuration."""

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
