"""Exception hierarchy shared by all modules."""


class PathPropError(Exception):
    """Base class for numerical failures (CLI exit code 3)."""


class PotentialSingularityError(PathPropError, ValueError):
    pass


class ResonanceError(PathPropError, ValueError):
    """sin(omega * T) vanishes; the harmonic interpolant is undefined."""


class LegendreError(PathPropError, ValueError):
    pass


class ConvergenceError(PathPropError, RuntimeError):
    pass


class InstabilityError(PathPropError, ValueError):
    """A second-variation eigenvalue is not strictly positive."""


class DegenerateSliceError(PathPropError, ValueError):
    """Even slice count with the 2n*pi mode family."""


class SingularTransformError(PathPropError, ValueError):
    def __init__(self, message, condition_number=None):
        super().__init__(message)
        self.condition_number = condition_number


class ConfigError(Exception):
    """Invalid experiment configuration (CLI exit code 2)."""

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if field:
            where.append(field)
        if line is not None:
            where.append(f"line {line}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)
