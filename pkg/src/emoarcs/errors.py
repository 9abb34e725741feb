"""Exception types raised across the package.

Everything derives from :class:`DataError` (itself a ``ValueError``) so the
CLI can map any data problem to exit status 1 with a single ``except``.
"""


class DataError(ValueError):
    pass


class ParseError(DataError):
    pass


class RangeError(DataError):
    pass


class EmptySeries(DataError):
    pass


class ShapeError(DataError):
    pass


class InvalidWindow(DataError):
    pass


class DegenerateSeries(DataError):
    pass


class InvalidTarget(DataError):
    pass


class LengthMismatch(DataError):
    pass


class EmptyInput(DataError):
    pass


class InvalidK(DataError):
    pass


class UnnormalizedInput(DataError):
    pass


class OutOfRange(DataError):
    pass


class EmptySet(DataError):
    pass


class UnsortedEdges(DataError):
    pass


class SingularMatrix(DataError):
    def __init__(self, message, column=None):
        super().__init__(message)
        self.column = column


class Underdetermined(DataError):
    pass


class DegenerateCluster(DataError):
    pass
