"""Numerical guard exceptions (CLI exit code 3)."""


class NumericalGuardError(RuntimeError):
    """Base for guard trips: the computation refused to continue."""


class PoleProximityError(NumericalGuardError):
    """An evaluation point came within the guard distance of a pole."""


class TruncationError(NumericalGuardError):
    """The shell tail failed the adaptive convergence criterion."""


class PathBlockedError(NumericalGuardError):
    """No admissible integration path clears the circle configuration."""
