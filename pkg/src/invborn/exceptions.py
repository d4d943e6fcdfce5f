"""Exception types raised by invborn."""


class InvBornError(ValueError):
    """Base class for all errors raised by this package."""


class UnsupportedOrderError(InvBornError):
    """Requested a multilinear order the operator family does not define."""


class DimensionError(InvBornError):
    """Vector length does not match the family's space dimension."""


class DivergentTailError(InvBornError):
    """Geometric tail bound requested where the series need not converge."""


class NonInvertibleError(InvBornError):
    """Linear term is zero or cannot be (pseudo)inverted."""


class EmptyDomainError(InvBornError):
    """Composition request with no admissible tuples."""


class CostGuardError(InvBornError):
    """Order exceeds the configured cost ceiling."""


class OutsideRadiusError(InvBornError):
    """Quantity only defined inside the convergence radius."""


class GeometryError(InvBornError):
    """Invalid measurement or voxel geometry."""
