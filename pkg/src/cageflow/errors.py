"""Exception types shared across the package."""


class CageflowError(Exception):
    """Base class for all package errors."""


class NoGoalError(CageflowError):
    """No goal marker lies on a navigable cell."""


class GoalOnObstacleError(CageflowError):
    """A goal marker lies on an obstacle cell."""


class UnreachableError(CageflowError):
    """Requested a path from a cell with no route to any goal."""


class DimensionMismatchError(CageflowError):
    """Grid operands do not share the required dimensions."""


class InconsistentPlanError(CageflowError):
    """Compression plan fails the consistency checks."""


class DoesNotFitError(CageflowError):
    """Compressed dimensions exceed the codec target."""


class DimsTooSmallError(CageflowError):
    """Floorplan dimensions cannot host the requested type."""


class InfeasibleError(CageflowError):
    """Sampling could not produce a valid configuration within the retry budget."""


class AllZeroMapError(CageflowError):
    """Metric requires at least one nonzero cell in each map."""


class ParamOutOfRangeError(CageflowError):
    """Simulation parameter outside its valid range."""
