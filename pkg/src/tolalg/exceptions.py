"""Exception hierarchy shared by every tolalg module."""


class TolalgError(Exception):
    """Base class for all errors raised by tolalg."""


class AlgebraError(TolalgError, ValueError):
    """An algebra, operation or argument tuple is malformed."""


class TableLengthMismatch(AlgebraError):
    pass


class EntryOutOfRange(AlgebraError):
    pass


class DuplicateOpName(AlgebraError):
    pass


class ArityMismatch(AlgebraError):
    pass


class ElementOutOfRange(AlgebraError):
    pass


class UnboundVariable(AlgebraError):
    pass


class VariableOutOfArity(AlgebraError):
    pass


class ResourceExceeded(TolalgError, RuntimeError):
    """A computation would exceed the configured resource limits."""


class PairNotInTolerance(TolalgError, LookupError):
    pass


class NotATolerance(TolalgError, ValueError):
    pass


class NotFound(TolalgError, LookupError):
    """No term with the requested properties exists in the variety."""


class DiagonalIdentityFails(TolalgError, ValueError):
    """The pair (f, g) does not satisfy f(x_i,x_i) = g(x_i,x_i)."""


class IncompatibleOccurrence(TolalgError, ValueError):
    pass


class ShapeMismatch(TolalgError, ValueError):
    pass


class MnFails(TolalgError):
    """The condition M(n) needed by a reduction fails in the variety."""


class ChainInvalid(TolalgError, ValueError):
    pass
