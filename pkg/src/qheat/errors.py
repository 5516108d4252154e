"""Exception hierarchy shared by all qheat modules."""


class QHeatError(Exception):
    """Base class for every error raised by qheat."""


class ShapeError(QHeatError, ValueError):
    """Operand dimensions are inconsistent."""


class InvariantError(QHeatError, ValueError):
    """A value violates the invariants of its type (hermiticity, trace, isometry...)."""


class ResourceError(QHeatError):
    """A dense matrix would exceed the configured entry cap."""


class NumericError(QHeatError):
    """An iterative numerical procedure failed to converge."""


class ConsistencyError(QHeatError):
    """Two independent evaluations of the same quantity disagree."""


class ContractError(QHeatError, ValueError):
    """A documented precondition of an operation is not met."""


class UnsupportedDecision(QHeatError):
    """No decision procedure exists for the supplied input class."""


class InadmissibleHTO(QHeatError):
    """The requested heat transfer operator cannot be realized."""

    def __init__(self, message, j_value=None):
        super().__init__(message)
        self.j_value = j_value


class StructureViolation(InadmissibleHTO):
    """The operator is not in the span of the products of Kraus operators."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class TruncationError(QHeatError):
    """A finite chain is too short to meet the requested tail bound and heat target."""

    def __init__(self, message, suggested_length=None):
        super().__init__(message)
        self.suggested_length = suggested_length


class FormatError(QHeatError, ValueError):
    """An input file could not be parsed."""


class BracketError(NumericError):
    """The root-finding bracket could not be established."""
