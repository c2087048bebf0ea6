"""Exception hierarchy shared across the simulator.

Each class maps to one CLI exit code so shell callers can tell input
mistakes from physics violations from unreadable files.
"""


class SimError(Exception):
    """Base class for all simulator errors."""

    exit_code = 1


class InputDomainError(SimError):
    """Bad user input: out-of-range operand, unknown key, malformed config."""

    exit_code = 2


class ConfigError(InputDomainError):
    """Config file or parameter set violates a structural invariant."""


class ConstraintError(SimError):
    """An analog design constraint was violated at runtime."""

    exit_code = 3


class CapacityError(ConstraintError):
    """More accumulation cycles requested than the accumulator supports."""


class PlacementError(InputDomainError):
    """Weight matrix does not fit the configured array."""


class FormatError(SimError):
    """A data file could not be parsed (bad magic, truncated payload)."""

    exit_code = 4
