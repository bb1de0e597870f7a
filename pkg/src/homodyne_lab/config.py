"""Scenario configuration files.

A scenario is a JSON object with the sections ``pump_chain``, ``detector``,
``budget``, ``sweep``, ``esa``, ``extrema`` and a top-level ``seed``.
Unknown keys are rejected and every validation failure names its field as
a dotted path (``esa.vbw``). A run manifest written by ``simulate`` is also
accepted wherever a scenario is expected.
"""
from __future__ import annotations

import json
import math
from importlib import resources
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .analysis import ExtremaConfig, Scenario
from .detector_model import ClearanceCurve, DetectorSpec, LossBudget
from .errors import ConfigurationError
from .esa_sim import EsaConfig, SweepConfig
from .pump_chain import PumpChainSpec, dbm_to_watts

BUNDLED_DEFAULT = "bench-default.json"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", allow_inf_nan=False)


class PumpChainModel(_Section):
    p_ir_dbm: float
    shg_eff_per_w: float = Field(ge=0)
    mu_per_sqrt_w: float = Field(ge=0)
    detuning_rad: float = 0.0


class DetectorModel(_Section):
    responsivity_a_per_w: float = Field(gt=0)
    nep_w_sqrthz: float = Field(gt=0)
    cmrr_db: float = Field(ge=0)
    bandwidth_3db_hz: float = Field(gt=0)
    clearance_anchors: list[tuple[float, float]]

    @field_validator("clearance_anchors")
    @classmethod
    def _anchors(cls, v):
        if len(v) < 2:
            raise ValueError("need at least two [hz, db] anchors")
        freqs = [f for f, _ in v]
        if any(f <= 0 for f in freqs):
            raise ValueError("anchor frequencies must be > 0")
        if any(b <= a for a, b in zip(freqs, freqs[1:])):
            raise ValueError("anchor frequencies must be strictly increasing")
        if any(c < 0 for _, c in v):
            raise ValueError("anchor clearances must be >= 0 dB")
        return v


class BudgetModel(_Section):
    eta_escape: float = Field(gt=0, le=1)
    eta_path: float = Field(gt=0, le=1)
    eta_pd: float = Field(gt=0, le=1)


class SweepModel(_Section):
    f_mod_hz: float = Field(200.0, gt=0)
    waveform: Literal["sinusoidal", "triangular", "static"] = "sinusoidal"
    amplitude_rad: float = Field(math.pi, gt=0)
    offset_rad: float = 0.0


class EsaModel(_Section):
    # field order matters: validators below read earlier fields
    rbw_hz: float = Field(20e6, gt=0)
    vbw_hz: float = Field(1e3, gt=0)
    f_center_hz: float = Field(gt=0)
    duration_s: float = Field(0.05, gt=0)
    n_points: int = Field(1001, ge=2)

    @field_validator("vbw_hz")
    @classmethod
    def _vbw_below_rbw(cls, v, info):
        rbw = info.data.get("rbw_hz")
        if rbw is not None and v > rbw:
            raise ValueError(f"vbw ({v:g} Hz) must not exceed rbw ({rbw:g} Hz)")
        return v

    @field_validator("f_center_hz")
    @classmethod
    def _center_above_half_rbw(cls, v, info):
        rbw = info.data.get("rbw_hz")
        if rbw is not None and v <= rbw / 2:
            raise ValueError(f"f_center ({v:g} Hz) must exceed rbw/2 ({rbw / 2:g} Hz)")
        return v


class ExtremaModel(_Section):
    min_prominence_db: float = Field(0.3, gt=0)
    edge_exclusion: float = Field(0.02, ge=0, lt=0.5)
    expected_period_s: Optional[float] = Field(None, gt=0)


class ScenarioModel(_Section):
    pump_chain: PumpChainModel
    detector: DetectorModel
    budget: BudgetModel
    sweep: SweepModel = SweepModel()
    esa: EsaModel
    seed: int = Field(ge=0, lt=2**64)
    extrema: ExtremaModel = ExtremaModel()

    def to_scenario(self) -> Scenario:
        sweep = SweepConfig(
            f_mod=self.sweep.f_mod_hz,
            waveform=self.sweep.waveform,
            amplitude=self.sweep.amplitude_rad,
            offset=self.sweep.offset_rad,
        )
        period = self.extrema.expected_period_s or sweep.expected_period
        return Scenario(
            pump=PumpChainSpec(
                p_ir_in=dbm_to_watts(self.pump_chain.p_ir_dbm),
                shg_eff=self.pump_chain.shg_eff_per_w,
                mu=self.pump_chain.mu_per_sqrt_w,
                detuning=self.pump_chain.detuning_rad,
            ),
            detector=DetectorSpec(
                responsivity=self.detector.responsivity_a_per_w,
                nep=self.detector.nep_w_sqrthz,
                cmrr=self.detector.cmrr_db,
                bandwidth_3db=self.detector.bandwidth_3db_hz,
                clearance=ClearanceCurve(tuple(self.detector.clearance_anchors)),
            ),
            budget=LossBudget(
                self.budget.eta_escape, self.budget.eta_path, self.budget.eta_pd
            ),
            sweep=sweep,
            esa=EsaConfig(
                f_center=self.esa.f_center_hz,
                rbw=self.esa.rbw_hz,
                vbw=self.esa.vbw_hz,
                duration=self.esa.duration_s,
                n_points=self.esa.n_points,
            ),
            seed=self.seed,
            extrema=ExtremaConfig(
                min_prominence=self.extrema.min_prominence_db,
                edge_exclusion=self.extrema.edge_exclusion,
                expected_period=period,
            ),
        )


def _first_error(exc: ValidationError) -> ConfigurationError:
    err = exc.errors()[0]
    path = ".".join(str(p) for p in err["loc"])
    return ConfigurationError(err["msg"], path=path or None)


def parse_config(data: dict, seed: int | None = None) -> ScenarioModel:
    """Validate a decoded scenario (or manifest) and apply a seed override."""
    if isinstance(data, dict) and "artifact_version" in data and "config" in data:
        data = data["config"]
    if not isinstance(data, dict):
        raise ConfigurationError("scenario must be a JSON object")
    try:
        model = ScenarioModel.model_validate(data)
    except ValidationError as exc:
        raise _first_error(exc) from None
    if seed is not None:
        if not 0 <= seed < 2**64:
            raise ConfigurationError("seed must be a 64-bit unsigned integer", path="seed")
        model = model.model_copy(update={"seed": seed})
    try:
        model.to_scenario()
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from None
    return model


def read_config_text(path: str | Path | None) -> str:
    """Raw JSON text of ``path``; the bundled bench defaults when ``path`` is None."""
    if path is None:
        return resources.files("homodyne_lab").joinpath("data", BUNDLED_DEFAULT).read_text()
    return Path(path).read_text()


def load_config(path: str | Path | None = None, seed: int | None = None) -> ScenarioModel:
    text = read_config_text(path)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"invalid JSON: {exc}") from None
    return parse_config(data, seed=seed)


def load_scenario(path: str | Path | None = None, seed: int | None = None) -> Scenario:
    return load_config(path, seed).to_scenario()


def bench_default() -> Scenario:
    return load_scenario(None)
