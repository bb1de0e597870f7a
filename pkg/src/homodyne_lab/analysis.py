"""Squeezing estimation from zero-span traces.

The pipeline is: normalize the signal trace to the shot-noise reference,
pick the prominent minima (squeezed quadrature) and maxima (anti-squeezed
quadrature) of the swept trace, average each set, and undo the known
detection loss to obtain the variances at the crystal.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import find_peaks

from .detector_model import DetectorSpec, LossBudget, clearance_at, eta_el_from_clearance
from .errors import ConfigurationError, DomainError, NoShotNoiseVisibility, UnphysicalMeasurementError
from .esa_sim import (
    EsaConfig,
    EsaTrace,
    SweepConfig,
    derive_seed,
    simulate_trace_analytic,
    trace_noise_sigma_db,
)
from .gaussian_core import (
    QuadratureVariances,
    check_efficiency,
    db_from_variance,
    pure_state_from_r,
    variance_from_db,
)
from .pump_chain import PumpChainSpec

THREADS_ENV = "HOMODYNE_LAB_THREADS"

# Same-kind extrema closer than this fraction of the expected period are merged.
_MIN_SPACING_FRACTION = 0.25
# At least this many extrema per expected period for a periodic sweep signature.
_MIN_EXTREMA_PER_PERIOD = 0.5
# Detectable squeezing must be deeper than this many trace-noise sigmas.
_DETECTION_SIGMAS = 2.0

REPORT_KEYS = (
    "f_center_hz",
    "m_sq_db",
    "m_asq_db",
    "n_minima",
    "n_maxima",
    "eta_assumed",
    "crystal_sq_db",
    "crystal_asq_db",
    "detectable",
)
SWEEP_COLUMNS = (
    "f_hz",
    "m_sq_db",
    "m_asq_db",
    "clearance_db",
    "eta_el",
    "eta_total",
    "crystal_sq_db",
    "crystal_asq_db",
    "detectable",
)


@dataclass(frozen=True)
class ExtremaConfig:
    min_prominence: float = 0.3  # dB
    edge_exclusion: float = 0.02
    expected_period: float = 0.5 / 200.0  # s, 1/(2 f_mod)

    def __post_init__(self):
        if not (math.isfinite(self.min_prominence) and self.min_prominence > 0):
            raise DomainError("min_prominence must be > 0 dB")
        if not 0 <= self.edge_exclusion < 0.5:
            raise DomainError("edge_exclusion must lie in [0, 0.5)")
        if not (math.isfinite(self.expected_period) and self.expected_period > 0):
            raise DomainError("expected_period must be > 0")


@dataclass(frozen=True)
class ExtremaEstimate:
    m_sq: float  # dB, nan when no minima qualify
    m_asq: float  # dB, nan when no maxima qualify
    n_minima: int
    n_maxima: int
    detectable: bool


@dataclass(frozen=True)
class SqueezingReport:
    f_center: float
    m_sq: float
    m_asq: float
    n_minima: int
    n_maxima: int
    eta_assumed: float
    crystal_sq: float
    crystal_asq: float
    detectable: bool

    def to_dict(self) -> dict:
        def num(x):
            return None if x is None or not math.isfinite(x) else float(x)

        return {
            "f_center_hz": float(self.f_center),
            "m_sq_db": num(self.m_sq),
            "m_asq_db": num(self.m_asq),
            "n_minima": int(self.n_minima),
            "n_maxima": int(self.n_maxima),
            "eta_assumed": num(self.eta_assumed),
            "crystal_sq_db": num(self.crystal_sq),
            "crystal_asq_db": num(self.crystal_asq),
            "detectable": bool(self.detectable),
        }


@dataclass(frozen=True)
class Scenario:
    """Everything needed to simulate and analyze one measurement."""

    pump: PumpChainSpec
    detector: DetectorSpec
    budget: LossBudget
    sweep: SweepConfig
    esa: EsaConfig
    seed: int
    extrema: ExtremaConfig

    def state(self) -> QuadratureVariances:
        return pure_state_from_r(self.pump.squeeze_parameter())


@dataclass(frozen=True)
class SweepEntry:
    report: SqueezingReport
    clearance_db: float
    eta_el: float
    eta_total: float
    note: str = ""
    failed: bool = False

    def row(self) -> dict:
        d = self.report.to_dict()
        return {
            "f_hz": d["f_center_hz"],
            "m_sq_db": d["m_sq_db"],
            "m_asq_db": d["m_asq_db"],
            "clearance_db": float(self.clearance_db),
            "eta_el": float(self.eta_el),
            "eta_total": float(self.eta_total),
            "crystal_sq_db": d["crystal_sq_db"],
            "crystal_asq_db": d["crystal_asq_db"],
            "detectable": d["detectable"],
        }


def _same_acquisition(a: EsaConfig, b: EsaConfig) -> bool:
    return (
        a.f_center == b.f_center
        and a.rbw == b.rbw
        and a.vbw == b.vbw
        and a.duration == b.duration
        and a.n_points == b.n_points
    )


def normalize_to_shot(signal: EsaTrace, shot_ref: EsaTrace) -> EsaTrace:
    """Express ``signal`` in dB relative to the mean level of ``shot_ref``."""
    if not _same_acquisition(signal.meta, shot_ref.meta):
        raise ConfigurationError("signal and shot reference were acquired with different ESA settings")
    if not np.array_equal(signal.t, shot_ref.t):
        raise ConfigurationError("signal and shot reference have different time axes")
    return replace(signal, p_db=signal.p_db - shot_ref.mean_db())


def _refine(y: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Parabolic-vertex value through each extremum and its two neighbours."""
    out = y[idx].astype(float)
    inner = (idx > 0) & (idx < y.size - 1)
    i = idx[inner]
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    curv = y0 - 2.0 * y1 + y2
    with np.errstate(divide="ignore", invalid="ignore"):
        corr = np.where(curv != 0.0, -((y0 - y2) ** 2) / (8.0 * curv), 0.0)
    out[inner] = y1 + corr
    return out


def estimate_extrema(trace: EsaTrace, cfg: ExtremaConfig) -> ExtremaEstimate:
    """Average the prominent minima and maxima of a shot-normalized trace."""
    t, y = trace.t, trace.p_db
    duration = t[-1] - t[0]
    if duration < 2 * cfg.expected_period:
        raise DomainError("trace must cover at least two expected extremum periods")
    dt = duration / (t.size - 1)
    distance = max(1, int(_MIN_SPACING_FRACTION * cfg.expected_period / dt))

    lo = t[0] + cfg.edge_exclusion * duration
    hi = t[-1] - cfg.edge_exclusion * duration

    def pick(values):
        idx, _ = find_peaks(values, prominence=cfg.min_prominence, distance=distance)
        return idx[(t[idx] >= lo) & (t[idx] <= hi)]

    i_min = pick(-y)
    i_max = pick(y)
    m_sq = float(np.mean(_refine(y, i_min))) if i_min.size else math.nan
    m_asq = float(np.mean(_refine(y, i_max))) if i_max.size else math.nan

    needed = _MIN_EXTREMA_PER_PERIOD * (hi - lo) / cfg.expected_period
    periodic = i_min.size >= needed and i_max.size >= needed
    sigma = trace_noise_sigma_db(trace.meta)
    detectable = bool(
        periodic and m_sq < -_DETECTION_SIGMAS * sigma and m_asq > m_sq
    )
    return ExtremaEstimate(m_sq, m_asq, int(i_min.size), int(i_max.size), detectable)


def invert_loss(measured_v: float, eta: float) -> float:
    """Variance before a loss ``eta`` that would produce ``measured_v``."""
    eta = check_efficiency(eta)
    bound = 1.0 - eta
    if not measured_v > bound:
        raise UnphysicalMeasurementError(float(measured_v), bound)
    return (measured_v - bound) / eta


def invert_db(measured_db: float, eta: float) -> float:
    return db_from_variance(invert_loss(variance_from_db(measured_db), eta))


def fit_pure_state(m_sq_db: float, m_asq_db: float) -> tuple[QuadratureVariances, float]:
    """Pure state and effective efficiency that reproduce measured extrema.

    Solves eta*(1 - v) = 1 - N_min and eta*(1/v - 1) = N_max - 1 for the
    squeezed variance v, i.e. v = (1 - N_min)/(N_max - 1).
    """
    n_min, n_max = variance_from_db(m_sq_db), variance_from_db(m_asq_db)
    if not (n_min < 1.0 < n_max):
        raise DomainError("need m_sq < 0 < m_asq to fit a squeezed state")
    v = (1.0 - n_min) / (n_max - 1.0)
    if v >= 1.0:
        raise DomainError("anti-squeezing must exceed squeezing for a pure-state fit")
    eta = (1.0 - n_min) / (1.0 - v)
    if eta > 1.0:
        raise UnphysicalMeasurementError(n_min, 0.0)
    return QuadratureVariances(v, 1.0 / v), eta


def analyze_traces(
    signal: EsaTrace, shot_ref: EsaTrace, eta: float, cfg: ExtremaConfig
) -> SqueezingReport:
    normalized = normalize_to_shot(signal, shot_ref)
    est = estimate_extrema(normalized, cfg)
    crystal_sq = crystal_asq = math.nan
    if math.isfinite(est.m_sq):
        try:
            crystal_sq = invert_db(est.m_sq, eta)
        except UnphysicalMeasurementError:
            pass
    if math.isfinite(est.m_asq):
        crystal_asq = invert_db(est.m_asq, eta)
    return SqueezingReport(
        f_center=signal.meta.f_center,
        m_sq=est.m_sq,
        m_asq=est.m_asq,
        n_minima=est.n_minima,
        n_maxima=est.n_maxima,
        eta_assumed=eta,
        crystal_sq=crystal_sq,
        crystal_asq=crystal_asq,
        detectable=est.detectable,
    )


def thread_cap() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return min(8, os.cpu_count() or 1)


def _sweep_one(scenario: Scenario, index: int, f: float) -> SweepEntry:
    cl_db = float(clearance_at(scenario.detector.clearance, f))
    try:
        eta_el = eta_el_from_clearance(cl_db)
    except NoShotNoiseVisibility:
        eta_el = 0.0
    eta_total = scenario.budget.optical * eta_el
    try:
        esa = replace(scenario.esa, f_center=float(f))
        state = scenario.state()
        traces = [
            simulate_trace_analytic(
                state, scenario.budget, scenario.detector, scenario.sweep, esa,
                derive_seed(scenario.seed, index, k), kind=kind,
            )
            for k, kind in enumerate(("signal", "shot_reference"))
        ]
        if eta_total == 0.0:
            raise NoShotNoiseVisibility(f"clearance {cl_db} dB at {f} Hz")
        report = analyze_traces(*traces, eta_total, scenario.extrema)
        note = "" if report.detectable else "extrema not distinguishable from trace noise"
    except (DomainError, ConfigurationError, NoShotNoiseVisibility) as exc:
        nan = math.nan
        report = SqueezingReport(
            float(f), nan, nan, 0, 0, eta_total if eta_total > 0 else nan, nan, nan, False
        )
        return SweepEntry(report, cl_db, eta_el, eta_total, f"{type(exc).__name__}: {exc}", True)
    return SweepEntry(report, cl_db, eta_el, eta_total, note)


def frequency_sweep(scenario: Scenario, frequencies, threads: int | None = None) -> list[SweepEntry]:
    """One report per analysis frequency, in input order.

    Failures are recorded as undetectable entries with a note instead of
    aborting the sweep.
    """
    freqs = [float(f) for f in frequencies]
    if not freqs:
        raise DomainError("frequency list is empty")
    if any(not (math.isfinite(f) and f > 0) for f in freqs):
        raise DomainError("frequencies must be finite and > 0")
    workers = min(threads or thread_cap(), len(freqs))
    if workers <= 1:
        return [_sweep_one(scenario, i, f) for i, f in enumerate(freqs)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda args: _sweep_one(scenario, *args), enumerate(freqs)))
