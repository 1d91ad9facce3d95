"""Exception hierarchy shared across the package."""


class MomentCardError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(MomentCardError, ValueError):
    """Operands disagree on the number of variables or on a shape."""


class DegreeOverflowError(MomentCardError, ValueError):
    """A relaxation order is too small for the degrees it has to cover."""


class ExtractionUnavailable(MomentCardError):
    """Point extraction needs a rank-one moment matrix."""


class DecompositionError(MomentCardError):
    """A Gram matrix is indefinite beyond tolerance."""


class InfeasibleError(MomentCardError):
    """The constraint set has no feasible point."""


class ExportError(MomentCardError):
    """An SDP cannot be written in SDPA sparse format as is."""


class SolverError(MomentCardError):
    """An LP or SDP solve failed in a way the caller cannot recover from."""
