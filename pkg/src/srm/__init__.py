"""Driven multi-ensemble superradiance: potentials, dark-state covariances,
squeezing coefficients and a finite-N Lindblad simulator."""

__version__ = "0.1.0"

from .model import EnsembleConfig, TaskVector, config_from_task, validate_config  # noqa: E402

__all__ = [
    "EnsembleConfig",
    "TaskVector",
    "config_from_task",
    "validate_config",
    "__version__",
]
