"""Exception types raised by the solvers."""


class HConfError(Exception):
    """Base class for all package errors."""


class DimensionError(HConfError, ValueError):
    pass


class DomainError(HConfError, ValueError):
    """A radius or parameter lies outside the region where an object is defined."""


class UnsupportedGridError(HConfError, ValueError):
    pass


class InfeasibleConstraintError(HConfError, ValueError):
    """No boundary data satisfies the area and pointwise bounds simultaneously."""


class SolverError(HConfError, RuntimeError):
    """An ODE integration or optimizer failed outright."""


class ConfigError(HConfError, ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
