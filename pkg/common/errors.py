"""
Exception hierarchy shared by every FastMel module.

Each class carries the process exit code the CLI reports for it.
"""


class FastMelError(Exception):

    exit_code = 2


class UsageError(FastMelError):

    exit_code = 1


class DataError(FastMelError, ValueError):

    exit_code = 2


class ShapeError(DataError):
    pass


class ContainerError(DataError):
    pass


class SpecError(DataError):
    pass


class DegenerateDirectionError(DataError):
    pass


class OverPrunedError(DataError):
    pass


class AudioFormatError(DataError):
    pass


class InvariantError(FastMelError):

    exit_code = 3


class ThreadLimitError(InvariantError):
    pass
