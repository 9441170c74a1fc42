"""Exception types shared across the package."""


class MirrorQEDError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(MirrorQEDError, ValueError):
    """Invalid or inconsistent experiment configuration."""


class TransmonRegimeError(MirrorQEDError, ValueError):
    """EJ/EC fell below the transmon-regime threshold at an operating point."""


class UnreachableFrequencyError(MirrorQEDError, ValueError):
    """Requested transition frequency exceeds the zero-flux maximum."""


class ZeroDriveError(MirrorQEDError, ValueError):
    """Reflection is undefined as a driven-response ratio when the reference
    Rabi amplitude is zero."""


class RegisterCapacityError(MirrorQEDError, ValueError):
    """Atom count exceeds the dense-superoperator capacity cap."""


class SolverError(MirrorQEDError, RuntimeError):
    """Base class for numerical-solution failures."""


class SingularSystemError(SolverError):
    """The steady-state kernel is multidimensional; no unique solution."""


class StepFailureError(SolverError):
    """The adaptive integrator failed to advance (step size underflow)."""


class FitConvergenceError(SolverError):
    """Nonlinear least squares did not converge within the iteration budget."""


class InsufficientDipsError(MirrorQEDError, ValueError):
    """Fewer than two dips were detected anywhere in the sweep region."""


class VelocityInconsistencyError(MirrorQEDError, ValueError):
    """Per-node velocity estimates disagree beyond the accepted spread."""
