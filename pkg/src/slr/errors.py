"""Exception types raised across the package."""


class SLRError(Exception):
    """Base class for all errors raised by :mod:`slr`."""


class ZeroRadius(SLRError, ValueError):
    """A point coincides with the origin it is expressed relative to."""


class NoGroundNearby(SLRError):
    """No ground-labeled point lies within the search radius of a position."""


class EmptyCloud(SLRError, ValueError):
    pass


class EmptyInput(SLRError, ValueError):
    pass


class EmptyTarget(SLRError, ValueError):
    pass


class NotEnoughCells(SLRError, ValueError):
    pass


class NoPointsInRange(SLRError):
    """No point survived the class/range filters of a distance histogram."""


class CloudFormatError(SLRError, ValueError):
    """A point-cloud file could not be parsed.

    Attributes:
        path: file being read.
        line: 1-based line number of the offending record, when known.
    """

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
