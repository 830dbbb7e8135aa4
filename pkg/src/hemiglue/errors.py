"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class HemiglueError(Exception):
    """Base class for every error raised by the package."""


class DomainError(HemiglueError, ValueError):
    """An argument lies outside the domain of the operation."""


class PoleError(DomainError):
    """A chart was evaluated at its projection pole."""


class ConfigError(HemiglueError, ValueError):
    """A configuration value is missing, malformed or out of range."""


class ResourceError(HemiglueError, MemoryError):
    """A requested resolution exceeds the documented memory bound."""


class UndefinedValueError(HemiglueError, ArithmeticError):
    """A pointwise quantity is undefined at the requested point.

    Raised, for instance, for the metric speed at a kink of a piecewise linear
    lift or inside an arc that carries singular mass.  Kept distinct from a
    returned zero so callers can tell "vanishes" from "does not exist".
    """


class InfeasibleError(HemiglueError, ArithmeticError):
    """No path joins the two boundary sets of a condenser.

    The modulus of an empty path family is zero; it is attached as
    ``modulus`` so callers that want the value can still read it.
    """

    def __init__(self, message: str, modulus: float = 0.0):
        super().__init__(message)
        self.modulus = modulus
