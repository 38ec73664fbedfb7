"""Exception hierarchy shared by all modules."""


class SRMError(Exception):
    """Base class for every error raised by this package."""

    #: exit code used by the command-line front end
    exit_code = 2


class ConfigError(SRMError):
    exit_code = 1


class NormalizationError(ConfigError):
    """Population fractions or couplings do not sum to one."""


class DomainError(ConfigError):
    """An argument lies outside the domain of the operation."""


class NonIntegralPopulation(ConfigError):
    """N * eta_j is not an integer, so no Dicke ladder exists."""


class NumericalError(SRMError):
    exit_code = 2


class StabilityError(NumericalError):
    """Curvature of the superradiance potential is not positive."""


class SingularModeError(NumericalError):
    """cos(c_j theta) vanishes for some ensemble; the linearization breaks."""


class StepFailure(NumericalError):
    """Adaptive integrator could not proceed (step size underflow)."""


class SingularCovariance(NumericalError):
    """Measurement covariance matrix is not invertible."""


class DimensionCap(NumericalError):
    """Hilbert space (or Liouville space) exceeds the configured cap."""


class NonConvergence(NumericalError):
    """Steady-state solver stopped before reaching its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DegenerateFrame(NumericalError):
    """Mean spin too short to define a local (X, Y, Z) frame."""
