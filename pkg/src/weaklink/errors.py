"""Exception hierarchy shared by the pipeline stages.

The CLI maps these onto exit codes: InputError -> 1, DataError -> 2,
UnknownNameError -> 3 (argparse usage failures exit 64).
"""


class WeaklinkError(Exception):
    """Base class for all errors raised by this package."""


class InputError(WeaklinkError):
    """A file is missing, unreadable, or malformed."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix = f"{path}:"
            if line is not None:
                prefix += f"{line}:"
            prefix += " "
        super().__init__(prefix + message)


class DataError(WeaklinkError):
    """The inputs parse but are unusable (empty dataset, degenerate labels, ...)."""


class UnknownNameError(WeaklinkError):
    """A query name has no entry in the repository (unlinkable mention)."""
