"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class DemPoolError(Exception):
    exit_code = 1


class InputIOError(DemPoolError):
    exit_code = 3


class ParseError(DemPoolError):
    exit_code = 4


class DimensionMismatch(DemPoolError):
    exit_code = 4


class NonFiniteEntry(DemPoolError):
    exit_code = 5


class ZeroNormRow(DemPoolError):
    exit_code = 5


class InvalidSpec(DemPoolError):
    exit_code = 5


class ZeroRowSum(DemPoolError):
    exit_code = 6


class NonPositiveKernel(DemPoolError):
    exit_code = 6


class ZeroDescriptor(DemPoolError):
    exit_code = 6


class NonSymmetricMatrix(DemPoolError):
    exit_code = 6


class ConvergenceError(DemPoolError):
    exit_code = 6


class EncodingMismatch(DemPoolError):
    exit_code = 4


class InvalidInput(DemPoolError):
    exit_code = 5
