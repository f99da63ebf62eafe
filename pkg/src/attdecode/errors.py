"""Exception types raised by attdecode."""


class AttDeCoDeError(Exception):
    """Base class for all library errors."""


class InputError(AttDeCoDeError, ValueError):
    """Malformed or inconsistent user input."""


class UnknownNodeId(InputError):
    pass


class DuplicateEdge(InputError):
    pass


class SelfLoop(InputError):
    pass


class NonFiniteAttribute(InputError):
    pass


class LengthMismatch(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class KTooLarge(InputError):
    pass


class EmptyMatrix(InputError):
    pass


class EmptyLabeling(InputError):
    pass


class EmptyInput(InputError):
    pass


class MissingFixture(AttDeCoDeError, FileNotFoundError):
    pass


class SingularCovariance(AttDeCoDeError, ArithmeticError):
    """A covariance stayed non positive definite after eigenvalue flooring."""
