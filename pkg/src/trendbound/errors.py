class TrendboundError(Exception):
    pass


class InvalidParameterError(TrendboundError, ValueError):
    pass


class ContractViolationError(TrendboundError, ValueError):
    """An argument breaks a structural precondition (e.g. a non-neighbor in an exposing set)."""


class InputError(TrendboundError, ValueError):
    """Malformed or inconsistent external input (files, seed sets, logs)."""


class DivergenceError(TrendboundError, ArithmeticError):
    pass


class ChernoffValidityError(TrendboundError, ValueError):
    """rho is not strictly below delta_t * sigma."""


class NoValidRhoError(ChernoffValidityError):
    pass


class EnumerationLimitError(TrendboundError):
    pass
