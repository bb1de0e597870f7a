"""Single-mode squeezed vacuum in shot-noise units.

States are stored as their extremal quadrature variances (vacuum = 1) so
that mixed states produced by loss are represented exactly. The squeezed
quadrature sits at LO phase pi/2 and the anti-squeezed one at 0 (mod pi).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

_UNCERTAINTY_SLACK = 1e-12


def check_efficiency(eta: float, name: str = "eta") -> float:
    """Validate an efficiency in (0, 1] and return it as a float."""
    eta = float(eta)
    if not (math.isfinite(eta) and 0.0 < eta <= 1.0):
        raise DomainError(f"{name} must lie in (0, 1], got {eta!r}")
    return eta


@dataclass(frozen=True)
class QuadratureVariances:
    v_min: float
    v_max: float

    def __post_init__(self):
        v_min, v_max = float(self.v_min), float(self.v_max)
        if not (math.isfinite(v_min) and math.isfinite(v_max)):
            raise DomainError("variances must be finite")
        if v_min <= 0.0:
            raise DomainError(f"v_min must be positive, got {v_min!r}")
        if v_max < v_min:
            raise DomainError(f"v_max ({v_max!r}) must be >= v_min ({v_min!r})")
        if v_min * v_max < 1.0 - _UNCERTAINTY_SLACK:
            raise DomainError(
                f"v_min * v_max = {v_min * v_max!r} violates the uncertainty bound"
            )
        object.__setattr__(self, "v_min", v_min)
        object.__setattr__(self, "v_max", v_max)

    @classmethod
    def vacuum(cls) -> QuadratureVariances:
        return cls(1.0, 1.0)

    @property
    def purity_product(self) -> float:
        """v_min * v_max; equals 1 for pure states."""
        return self.v_min * self.v_max

    def squeezing_db(self) -> float:
        return db_from_variance(self.v_min)

    def antisqueezing_db(self) -> float:
        return db_from_variance(self.v_max)

    def r(self) -> float:
        """Squeezing parameter; defined for pure states only."""
        if abs(self.purity_product - 1.0) > 1e-9:
            raise DomainError("r is only defined for pure states")
        return -0.5 * math.log(self.v_min)


def pure_state_from_r(r: float) -> QuadratureVariances:
    r = float(r)
    if not math.isfinite(r) or r < 0.0:
        raise DomainError(f"squeezing parameter must be finite and >= 0, got {r!r}")
    return QuadratureVariances(math.exp(-2.0 * r), math.exp(2.0 * r))


def apply_loss(s: QuadratureVariances, eta: float) -> QuadratureVariances:
    """Beam-splitter loss: each variance v -> eta*v + (1 - eta)."""
    eta = check_efficiency(eta)
    return QuadratureVariances(
        eta * s.v_min + (1.0 - eta), eta * s.v_max + (1.0 - eta)
    )


def variance_at_phase(s: QuadratureVariances, theta):
    """Quadrature variance seen at LO phase ``theta`` (scalar or array).

    v_max*cos^2(theta) + v_min*sin^2(theta), which is pi-periodic.
    """
    theta_arr = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(theta_arr)):
        raise DomainError("LO phase must be finite")
    # Reducing mod pi keeps cos/sin accurate for large sweep offsets.
    reduced = np.mod(theta_arr, math.pi)
    c2 = np.cos(reduced) ** 2
    out = s.v_max * c2 + s.v_min * (1.0 - c2)
    out = np.clip(out, s.v_min, s.v_max)
    if np.ndim(theta) == 0:
        return float(out)
    return out


def db_from_variance(v):
    v_arr = np.asarray(v, dtype=float)
    if np.any(~(v_arr > 0.0)):
        raise DomainError("variance must be positive to express in dB")
    out = 10.0 * np.log10(v_arr)
    return float(out) if np.ndim(v) == 0 else out


def variance_from_db(db):
    out = np.power(10.0, np.asarray(db, dtype=float) / 10.0)
    return float(out) if np.ndim(db) == 0 else out
