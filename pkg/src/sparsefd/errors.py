"""Exception hierarchy shared by all modules."""


class StencilError(Exception):
    """Base class for errors raised by this package."""


class DimensionMismatch(StencilError, ValueError):
    pass


class AllNodesCoincide(StencilError, ValueError):
    """Every node of the set of influence equals the center."""


class OrderTooLow(StencilError, ValueError):
    """Consistency order q does not exceed the operator order."""


class GrowthInfinite(StencilError):
    """The exactness system is inconsistent, i.e. the growth function is infinite.

    ``node`` carries the offending node index when raised during assembly.
    """

    def __init__(self, message="GROWTH_INFINITE", node=None):
        super().__init__(message)
        self.node = node


class NumericalBreakdown(StencilError, ArithmeticError):
    pass


class SingularDiagonal(NumericalBreakdown):
    """Triangular solve hit a zero (or subnormal) diagonal entry."""


class Inconsistent(StencilError):
    """Linear system has no solution within the residual tolerance."""


class Infeasible(StencilError):
    """Linear program has an empty feasible set."""


class Unbounded(StencilError):
    """Linear program objective is unbounded below."""


class IterationLimit(StencilError):
    pass


class KTooLarge(StencilError, ValueError):
    pass


class SolveFailed(StencilError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
