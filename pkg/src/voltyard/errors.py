"""Exception types shared across the package."""


class SimError(Exception):
    """Base class for simulator errors."""


class StationError(SimError):
    """Invalid station architecture (duplicate ids, cycles, bad coefficients)."""


class DataError(SimError):
    """Invalid or inconsistent input data; message carries the file/line."""


class EpisodeDone(SimError):
    """step() called on an environment whose episode already terminated."""
