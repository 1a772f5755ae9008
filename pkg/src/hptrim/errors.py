"""Exception types shared across the package.

The CLI maps these onto process exit codes (config 2, stationarity 3,
data 4); library callers can catch them individually.
"""


class ConfigError(ValueError):
    """Invalid configuration, parameters, or unsupported combination."""


class StationarityError(RuntimeError):
    """A network spec fails the stationarity requirement.

    Carries the offending :class:`~hptrim.network.SpectrumReport` in
    ``self.report`` when available.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class DataError(ValueError):
    """Malformed or unusable input data (event files, empty inputs)."""


class SimulationRunawayError(RuntimeError):
    """The simulator exceeded its event guard limit."""
