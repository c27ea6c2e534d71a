"""Exception hierarchy for qdisplace."""


class QDisplaceError(Exception):
    """Base class for all errors raised by this package."""


class LabelError(QDisplaceError, ValueError):
    """Duplicate, unknown or inconsistent subsystem labels."""


class ShapeMismatchError(QDisplaceError, ValueError):
    """Operands live on incompatible registers."""


class ZeroBranchError(QDisplaceError, ArithmeticError):
    """A measurement branch has (numerically) zero probability."""


class NonOrthonormalError(QDisplaceError, ValueError):
    """A set of vectors expected to be orthonormal is not."""


class InvalidLabelError(QDisplaceError, ValueError):
    """Basis label or index out of range."""


class DegenerateChannelError(QDisplaceError, ArithmeticError):
    """No unitary correction exists for a protocol branch."""


class PairingError(QDisplaceError, ValueError):
    """A swap expansion does not pair measured labels one-to-one."""


class InvariantViolation(QDisplaceError, AssertionError):
    """An internal consistency check failed."""
