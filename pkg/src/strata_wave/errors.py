"""Exception hierarchy shared by every module.

CLI exit codes are attached to the solver-facing errors so the frontend can
map failures to a fixed table without a lookup of its own.
"""


class StrataWaveError(Exception):
    exit_code = 1


class DomainError(StrataWaveError, ValueError):
    """A point or level lies outside ``[p0, 0]``."""


class UnsupportedOrderError(StrataWaveError, ValueError):
    """Requested derivative order exceeds the implementation cap."""


class ResolutionError(StrataWaveError, ValueError):
    """Derivative order too high for the grid to resolve honestly."""


class ConfigError(StrataWaveError, ValueError):
    exit_code = 2


class DivergenceError(StrataWaveError, RuntimeError):
    exit_code = 3

    def __init__(self, message, residual_history=()):
        super().__init__(message)
        self.residual_history = list(residual_history)


class StagnationError(StrataWaveError, RuntimeError):
    """``h_p`` dropped below the no-stagnation floor."""

    exit_code = 4


class BlowUpError(StrataWaveError, RuntimeError):
    exit_code = 4


class BifurcationPointError(StrataWaveError, RuntimeError):
    """The Jacobian is numerically singular."""

    exit_code = 5


class ChecksumError(StrataWaveError, ValueError):
    exit_code = 6


class InsufficientModesError(StrataWaveError, ValueError):
    pass


class NotGevreyDiagnosableError(StrataWaveError, ValueError):
    pass


class RuleViolationError(StrataWaveError, ValueError):
    """Majorant offsets do not match the selected product rule."""


class InequalityViolation(StrataWaveError, AssertionError):
    """A counterexample to an inequality that is supposed to be a theorem."""
