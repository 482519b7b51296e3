"""Exception types shared across the package."""


class PropKitError(Exception):
    """Base class for domain errors (the CLI maps these to exit code 1)."""


class InsufficientPrecision(PropKitError):
    """A predicate or branch cannot be decided at the available precision."""


class PrimeMismatch(PropKitError, ValueError):
    pass


class SeriesError(PropKitError, ValueError):
    """Unknown series name, wrong arity, or series unavailable for a prime."""


class RepresentationError(PropKitError, ValueError):
    """An element does not have the shape its group model expects."""


class LayerSolveFailure(PropKitError):
    """Basis images fail to span a layer of the lower p-series."""


class NotOpenAtPrecision(PropKitError):
    """Fewer than d pivots exist up to the working precision."""


class BudgetExceeded(PropKitError):
    pass


class NotNilpotent(PropKitError):
    pass


class NotAPGroup(PropKitError):
    pass


class PartitionInfeasible(PropKitError):
    pass


class ParseError(PropKitError, ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position
