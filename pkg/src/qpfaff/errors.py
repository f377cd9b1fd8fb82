"""Exception hierarchy.

``QpfaffError`` is the common base.  Subclasses of ``NumericalError`` signal a
failed numerical precondition (singular matrix, degenerate conditioning,
invalid kernel) and map to exit status 3 on the command line.
"""


class QpfaffError(Exception):
    pass


class NotSelfAdjointError(QpfaffError, ValueError):
    """A matrix failed the (almost) self-adjointness check."""


class SizeCapError(QpfaffError, ValueError):
    """Input exceeds the size cap of an exponential-cost routine."""


class NumericalError(QpfaffError, ArithmeticError):
    pass


class SingularMatrixError(NumericalError):
    pass


class DegeneratePalmError(NumericalError):
    """Palm conditioning at a point (or tuple) of vanishing intensity."""


class ExistenceError(NumericalError):
    """``1 + (g - 1) K`` is not invertible, so ``K^g`` is undefined."""


class SingularResolventError(NumericalError):
    """``1 - chi_B K`` is not invertible for the conditioning window."""


class SingularPathError(NumericalError):
    """Square-root continuation failed to resolve the branch."""


class InvalidKernelError(NumericalError):
    """The kernel does not define a probability measure on the grid."""

    def __init__(self, message, subset=None, value=None):
        super().__init__(message)
        self.subset = subset
        self.value = value


class ZeroProbabilityError(NumericalError):
    pass
