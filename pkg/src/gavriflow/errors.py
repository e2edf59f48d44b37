"""Exception types shared by the gavriflow modules."""


class GavriflowError(Exception):
    pass


class ParameterError(GavriflowError, ValueError):
    """Input constants violate a precondition."""


class SingularSystemError(GavriflowError, ArithmeticError):
    """The 2x2 profile system has a (near) zero determinant."""


class InadmissiblePointError(GavriflowError, ValueError):
    pass


class DomainError(GavriflowError, ValueError):
    pass


class ExtensionError(GavriflowError, RuntimeError):
    pass


class DataError(GavriflowError, ValueError):
    """Malformed or out-of-range data (files, negative psi, ...)."""
