"""Exception hierarchy shared by every module."""


class QCondError(Exception):
    """Base class for all errors raised by :mod:`qcond`."""


class InvalidWeights(QCondError, ValueError):
    pass


class ZeroMassSet(QCondError, ValueError):
    pass


class DomainMismatch(QCondError, ValueError):
    pass


class InvalidQuerySet(QCondError, ValueError):
    pass


class PairRestrictionViolation(QCondError, ValueError):
    pass


class SubsetViolation(QCondError, ValueError):
    pass


class BackendCapExceeded(QCondError, RuntimeError):
    pass


class InvalidParameter(QCondError, ValueError):
    pass


class CalibrationFailure(QCondError, RuntimeError):
    pass


class InvalidComparison(QCondError, ValueError):
    pass


class DegenerateRatio(QCondError, ArithmeticError):
    pass


class OddDimension(QCondError, ValueError):
    pass


class DimensionMismatch(QCondError, ValueError):
    pass


class SizeLimit(QCondError, ValueError):
    pass


class CoincidentPoints(QCondError, ValueError):
    pass


class ConfigError(QCondError, ValueError):
    pass


class InsufficientData(QCondError, ValueError):
    pass
