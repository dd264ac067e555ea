"""Exception hierarchy. Every error raised by the package derives from GsrcError."""


class GsrcError(Exception):
    pass


class InvalidField(GsrcError, ValueError):
    pass


class DivisionByZero(GsrcError, ZeroDivisionError):
    pass


class SingularMatrix(GsrcError, ArithmeticError):
    pass


class InvalidParams(GsrcError, ValueError):
    pass


class NoValidPartition(GsrcError):
    """The partition search ran out of candidates for a node."""


class PreconditionViolated(GsrcError, ValueError):
    pass


class MdsSearchExhausted(GsrcError):
    """No coefficient draw within the retry budget gave an MDS code."""


class WrongNodeCount(GsrcError, ValueError):
    pass


class UnsolvableSchedule(GsrcError):
    pass


class MissingSymbol(GsrcError, KeyError):
    pass


class BoundViolation(GsrcError, AssertionError):
    pass


class UnsupportedOperation(GsrcError):
    pass
