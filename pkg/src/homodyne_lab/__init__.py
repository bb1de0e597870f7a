"""Squeezed-light generation and balanced homodyne detection toolkit.

Simulates the SHG -> SPDC pump chain, a noise-limited balanced receiver,
zero-span spectrum-analyzer traces under a swept local-oscillator phase,
and the shot-noise-normalized squeezing estimation built on top of them.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigurationError,
    DomainError,
    InconsistentSpecError,
    NoShotNoiseVisibility,
    UnphysicalMeasurementError,
)
from .gaussian_core import (
    QuadratureVariances,
    apply_loss,
    db_from_variance,
    pure_state_from_r,
    variance_at_phase,
    variance_from_db,
)

__all__ = [
    "__version__",
    "ConfigurationError",
    "DomainError",
    "InconsistentSpecError",
    "NoShotNoiseVisibility",
    "UnphysicalMeasurementError",
    "QuadratureVariances",
    "apply_loss",
    "db_from_variance",
    "pure_state_from_r",
    "variance_at_phase",
    "variance_from_db",
]
