"""Exception types. Each carries the CLI exit code it maps to."""


class DiffusionError(Exception):
    exit_code = 1


class GraphError(DiffusionError, ValueError):
    pass


class MalformedLine(GraphError):
    exit_code = 3


class SelfLoop(GraphError):
    exit_code = 4


class IndexOutOfRange(GraphError):
    exit_code = 5


class CountMismatch(GraphError):
    exit_code = 6


class InvalidParams(DiffusionError, ValueError):
    exit_code = 7


class LengthMismatch(DiffusionError, ValueError):
    exit_code = 8


class ArithmeticOverflow(DiffusionError, OverflowError):
    """A value left the signed 64-bit range; retry with ``wide=True``."""

    exit_code = 9


class CapExceeded(DiffusionError, RuntimeError):
    exit_code = 10


class TraceTooShort(DiffusionError, ValueError):
    exit_code = 11


class SinkWriteFailure(DiffusionError, OSError):
    exit_code = 12


#: exit code for unreadable input / unwritable output files
IO_ERROR = 13
#: exit code for a failed theorem check (verify / scan)
CHECK_FAILED = 1
#: exit code for argument errors (argparse default)
USAGE = 2
