"""Exception hierarchy shared by all modules."""


class FluctuonError(Exception):
    """Base class for package errors."""


class DimensionError(FluctuonError, ValueError):
    """Operands live on incompatible grids or have mismatched shapes."""


class ParameterError(FluctuonError, ValueError):
    """A scalar parameter is outside its admissible range."""


class CapacityError(FluctuonError):
    """A configured size or degree cap would be exceeded."""


class ContractError(FluctuonError, ValueError):
    """An input violates a structural precondition (self-adjointness, symplecticity, ...)."""


class ShapeError(ContractError):
    """A monomial does not have the degree an operation requires."""


class DegeneracyError(FluctuonError):
    """A symplectic form is singular where a nondegenerate one is needed."""


class CondensateError(DegeneracyError):
    """A bosonic mode sits on the condensate path (z e^{-beta h} -> 1)."""


class StateError(FluctuonError):
    """A covariance does not define a positive state."""


class PreconditionError(ContractError):
    """A physical precondition of a claim does not hold."""


class NoWitnessError(FluctuonError):
    """No non-commuting partner exists for an element (it is central)."""


class NumericError(FluctuonError):
    """A numerical procedure did not reach its target accuracy."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class FloorError(NumericError):
    """A value fell below the trustworthy numerical floor."""
