"""Exception hierarchy shared across the toolkit.

Data-shape problems (bad input files, broken panel structure) and numerical
failures (solver non-convergence, infeasible balance) are kept in separate
branches so batch callers can map them to distinct exit codes.
"""


class PanelDidError(Exception):
    """Base class for all toolkit errors."""


class DataShapeError(PanelDidError):
    """Input data violates a structural requirement."""


class DuplicateCell(DataShapeError):
    """The same (unit, period) pair appears more than once."""


class UnbalancedPanel(DataShapeError):
    """A unit is missing one or more periods."""


class NonBlockTreatment(DataShapeError):
    """Treatment flags do not form a single block in the final periods."""


class ParseError(DataShapeError):
    """A cell could not be parsed into the required type."""


class DesignError(DataShapeError):
    """Treatment design violates a precondition (arm sizes, period counts)."""


class EmptyArmError(DataShapeError):
    """A subsetting predicate left the treated or control arm empty."""


class DataError(DataShapeError):
    """A value is structurally valid but unusable (zero population, out of bounds)."""


class BinError(DataShapeError):
    """Binned-scatter request is incompatible with the data size."""


class NumericalError(PanelDidError):
    """A numerical routine failed to produce a usable result."""


class ConvergenceError(NumericalError):
    """An iterative solver hit its iteration cap before meeting tolerance.

    Carries the last iterate so callers can inspect how far the solve got.
    """

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


class InfeasibleBalance(NumericalError):
    """The balance moment conditions have no nonnegative solution."""


class DegenerateWeights(NumericalError):
    """A weighted regression cell carries zero total weight."""


class DegenerateResample(NumericalError):
    """Bootstrap redraws kept producing single-arm samples."""


class RankDeficient(NumericalError):
    """Regressors are collinear after fixed-effect absorption."""

    def __init__(self, message, column=None):
        super().__init__(message)
        self.column = column


class ConfigError(PanelDidError):
    """A batch-job configuration is invalid."""
