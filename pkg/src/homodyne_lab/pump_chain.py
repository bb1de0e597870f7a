"""Laser -> EDFA -> SHG -> SPDC power chain and the squeezing parameter it yields."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

# Calibrated so that -12.0 dBm of 775 nm pump gives -3.07 dB at the crystal.
DEFAULT_MU = 44.49  # W^-1/2
# 20 dBm in, -12.0 dBm out of the SHG stage (isolators included).
DEFAULT_SHG_EFF = 6.31e-3  # 1/W


def dbm_to_watts(p_dbm):
    out = np.power(10.0, (np.asarray(p_dbm, dtype=float) - 30.0) / 10.0)
    return float(out) if np.ndim(p_dbm) == 0 else out


def watts_to_dbm(p_w):
    p_arr = np.asarray(p_w, dtype=float)
    if np.any(~(p_arr > 0)):
        raise DomainError("power must be > 0 to express in dBm")
    out = 10.0 * np.log10(p_arr) + 30.0
    return float(out) if np.ndim(p_w) == 0 else out


def _sinc(x: float) -> float:
    return 1.0 if x == 0 else math.sin(x) / x


def shg_output(p_ir: float, shg_eff: float, detuning: float = 0.0) -> float:
    """Second-harmonic power, undepleted pump: eff * P^2 * sinc^2(detuning)."""
    if p_ir < 0 or shg_eff < 0:
        raise DomainError("SHG input power and efficiency must be >= 0")
    if not math.isfinite(detuning):
        raise DomainError("detuning must be finite")
    return shg_eff * p_ir**2 * _sinc(detuning) ** 2


def r_from_pump(mu: float, p_in: float) -> float:
    if mu < 0 or p_in < 0:
        raise DomainError("mu and pump power must be >= 0")
    return mu * math.sqrt(p_in)


def mu_for_target(squeezing_db: float, p_in: float) -> float:
    """Nonlinear strength that yields ``squeezing_db`` (< 0) at pump ``p_in``."""
    if squeezing_db >= 0 or p_in <= 0:
        raise DomainError("need negative target squeezing and positive pump power")
    r = -math.log(10.0 ** (squeezing_db / 10.0)) / 2.0
    return r / math.sqrt(p_in)


@dataclass(frozen=True)
class PumpChainSpec:
    p_ir_in: float = 0.1  # W into the SHG crystal (20 dBm)
    shg_eff: float = DEFAULT_SHG_EFF
    mu: float = DEFAULT_MU
    detuning: float = 0.0

    def __post_init__(self):
        for name in ("p_ir_in", "shg_eff", "mu"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise DomainError(f"{name} must be finite and >= 0, got {value!r}")
        if not math.isfinite(self.detuning):
            raise DomainError("detuning must be finite")

    def pump_power(self) -> float:
        return shg_output(self.p_ir_in, self.shg_eff, self.detuning)

    def squeeze_parameter(self) -> float:
        return r_from_pump(self.mu, self.pump_power())
