class LCSError(Exception):
    pass


class NonFiniteError(LCSError, ArithmeticError):
    """Integrated state left the floating-point range."""


class InvalidHorizonError(LCSError, ValueError):
    pass


class DegenerateEigenvalueError(LCSError):
    pass


class NotCrossedError(LCSError):
    """The monitored quantity never reached the threshold within the record."""


class OutOfBoundsError(LCSError, ValueError):
    pass


class MissingDataError(LCSError):
    """An interpolation stencil touches a missing (NaN) grid value."""


class NotInZ0Error(LCSError, ValueError):
    """Hessian is not negative definite with simple eigenvalues."""


class GridFormatError(LCSError, ValueError):
    pass
