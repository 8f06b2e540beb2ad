"""Exception hierarchy shared by all qdiv modules."""


class QdivError(Exception):
    """Base class for every error raised by the library."""


class NonHermitian(QdivError):
    pass


class NoConvergence(QdivError):
    pass


class DomainError(QdivError, ValueError):
    pass


class DimMismatch(QdivError, ValueError):
    pass


class BadRank(QdivError, ValueError):
    pass


class BadParams(QdivError, ValueError):
    pass


class NotPositive(QdivError, ValueError):
    pass


class NotNormalized(QdivError, ValueError):
    pass


class NotTracePreserving(QdivError, ValueError):
    pass


class SingularSigma(QdivError):
    pass


class SupportViolation(QdivError):
    pass


class GridExhausted(QdivError):
    pass


class BudgetViolation(QdivError, ValueError):
    pass


class BudgetExceeded(QdivError):
    pass


class DegenerateEpsilon(QdivError, ValueError):
    pass


class DegenerateVariance(QdivError, ValueError):
    pass


class PreconditionViolation(QdivError, ValueError):
    pass


class Intractable(QdivError):
    pass


class SingularMarginal(QdivError):
    pass


class MalformedInput(QdivError, ValueError):
    pass
