"""Exception hierarchy.

Each error carries the CLI exit code it maps to, so the command layer can
translate failures without a lookup table.
"""


class HyperlyapError(Exception):
    exit_code = 1


class InvalidInput(HyperlyapError):
    exit_code = 2


class InvalidParams(InvalidInput):
    pass


class UnknownCase(InvalidInput):
    pass


class UnsupportedPoint(InvalidInput):
    pass


class InvalidExponents(InvalidInput):
    pass


class InvalidTopology(InvalidInput):
    pass


class OutOfRange(InvalidInput):
    pass


class NotConcave(InvalidInput):
    pass


class CompositionConstantTerm(InvalidInput):
    pass


class ReciprocalZeroConstant(InvalidInput):
    pass


class ZeroCoefficientInWindow(InvalidInput):
    pass


class NotIntegrable(HyperlyapError):
    """Cusp monodromy has an eigenvalue off the unit circle."""

    exit_code = 3


class NumericalAlarm(HyperlyapError):
    exit_code = 4


class PrecisionAlarm(NumericalAlarm):
    pass


class NonTermination(NumericalAlarm):
    pass


class LogCancellationFailure(NumericalAlarm):
    pass


class PoleOrderMismatch(NumericalAlarm):
    pass


class CorruptSnapshot(HyperlyapError):
    exit_code = 5
