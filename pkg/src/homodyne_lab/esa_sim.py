"""Zero-span spectrum-analyzer traces of the balanced homodyne signal.

Two independent routes produce the same trace:

* :func:`simulate_trace_analytic` evaluates the expected normalized noise
  power along the LO phase sweep, runs it through the video filter and
  perturbs it with the power-averaging estimation noise.
* :func:`simulate_trace_montecarlo` synthesizes the photocurrent itself from
  independent Gaussian quadrature, vacuum and electronic noise records,
  band-pass filters it at the resolution bandwidth, squares it and video
  filters it. It only runs at desk-scale frequencies.

Powers are reported in dB relative to the shot-noise reference, which is
the (shot + electronic) level of a blocked-signal measurement.

Random numbers come from numpy's PCG64 seeded through ``SeedSequence``, so
a given seed reproduces the trace on any platform.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy import signal as sps

from .detector_model import DetectorSpec, LossBudget, eta_el_at
from .errors import ConfigurationError, DomainError, NoShotNoiseVisibility
from .gaussian_core import QuadratureVariances, check_efficiency, variance_at_phase

TraceKind = Literal["signal", "shot_reference", "electronic_floor"]
TRACE_KINDS = ("signal", "shot_reference", "electronic_floor")

DB_PER_NEPER_POWER = 10.0 / math.log(10.0)  # 10*log10(e)

# Monte Carlo runs at 4*(f_center + rbw) samples/s; above this it is not desk-scale.
MAX_MC_SAMPLE_RATE = 1e8
MAX_MC_SAMPLES = 2_000_000_000
_MC_CHUNK = 1 << 20

# Internal time step of the analytic path, as a fraction of the sweep period.
_SWEEP_OVERSAMPLING = 4000


@dataclass(frozen=True)
class SweepConfig:
    """LO phase modulation.

    ``waveform="static"`` holds the phase at ``offset`` (amplitude ignored);
    it is used for fixed-quadrature measurements.
    """

    f_mod: float = 200.0
    waveform: Literal["sinusoidal", "triangular", "static"] = "sinusoidal"
    amplitude: float = math.pi
    offset: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.f_mod) and self.f_mod > 0):
            raise DomainError("f_mod must be > 0")
        if not (math.isfinite(self.amplitude) and self.amplitude > 0):
            raise DomainError("sweep amplitude must be > 0")
        if not math.isfinite(self.offset):
            raise DomainError("sweep offset must be finite")
        if self.waveform not in ("sinusoidal", "triangular", "static"):
            raise DomainError(f"unknown sweep waveform {self.waveform!r}")

    @classmethod
    def static(cls, theta: float) -> SweepConfig:
        return cls(waveform="static", offset=float(theta))

    @property
    def expected_period(self) -> float:
        """Nominal spacing between same-kind extrema, 1/(2 f_mod)."""
        return 0.5 / self.f_mod


@dataclass(frozen=True)
class EsaConfig:
    f_center: float
    rbw: float = 20e6
    vbw: float = 1e3
    duration: float = 0.05
    n_points: int = 1001

    def __post_init__(self):
        if not (math.isfinite(self.rbw) and self.rbw > 0):
            raise DomainError("rbw must be > 0")
        if not (math.isfinite(self.vbw) and 0 < self.vbw <= self.rbw):
            raise DomainError(f"vbw must satisfy 0 < vbw <= rbw, got {self.vbw!r}")
        if not (math.isfinite(self.duration) and self.duration > 0):
            raise DomainError("duration must be > 0")
        if int(self.n_points) != self.n_points or self.n_points < 2:
            raise DomainError("n_points must be an integer >= 2")
        if not (math.isfinite(self.f_center) and self.f_center > self.rbw / 2):
            raise DomainError("f_center must exceed rbw/2")
        object.__setattr__(self, "n_points", int(self.n_points))

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.duration, self.n_points)

    @property
    def video_tau(self) -> float:
        return 1.0 / (2.0 * math.pi * self.vbw)


@dataclass(frozen=True)
class EsaTrace:
    meta: EsaConfig
    kind: TraceKind
    t: np.ndarray = field(repr=False)
    p_db: np.ndarray = field(repr=False)
    non_detecting: bool = False

    def __post_init__(self):
        if self.kind not in TRACE_KINDS:
            raise DomainError(f"unknown trace kind {self.kind!r}")
        t = np.asarray(self.t, dtype=float)
        p = np.asarray(self.p_db, dtype=float)
        if t.ndim != 1 or t.shape != p.shape or t.size < 2:
            raise DomainError("trace needs matching 1-D time and power arrays")
        if np.any(np.diff(t) <= 0):
            raise DomainError("trace timestamps must be strictly increasing")
        tol = 1e-9 * max(self.meta.duration, 1.0)
        if abs(t[0]) > tol or abs(t[-1] - self.meta.duration) > tol:
            raise DomainError("trace must span [0, duration]")
        if not np.all(np.isfinite(p)):
            raise DomainError("trace powers must be finite")
        t.flags.writeable = False
        p.flags.writeable = False
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "p_db", p)

    @property
    def linear(self) -> np.ndarray:
        return np.power(10.0, self.p_db / 10.0)

    def mean_db(self) -> float:
        """Level of the mean linear power, in dB."""
        return float(10.0 * np.log10(np.mean(self.linear)))


def derive_seed(seed: int, *keys: int) -> int:
    """Independent 64-bit child seed for a (seed, keys...) path."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _generator(seed: int) -> np.random.Generator:
    if int(seed) < 0 or int(seed) >= 1 << 64:
        raise DomainError("seed must be a 64-bit unsigned integer")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def phase_at(t, sweep: SweepConfig):
    """LO phase in radians at time(s) ``t`` >= 0."""
    t_arr = np.asarray(t, dtype=float)
    x = sweep.f_mod * t_arr
    if sweep.waveform == "sinusoidal":
        out = sweep.offset + sweep.amplitude * np.sin(2.0 * math.pi * x)
    elif sweep.waveform == "triangular":
        # unit triangle wave in phase with the sine: 0 at x=0, +1 at x=1/4
        frac = np.mod(x + 0.25, 1.0)
        out = sweep.offset + sweep.amplitude * (1.0 - 4.0 * np.abs(frac - 0.5))
    else:
        out = np.full_like(t_arr, sweep.offset)
    return float(out) if np.ndim(t) == 0 else out


def normalized_power(theta, state: QuadratureVariances, eta_opt: float, eta_el: float):
    """Receiver noise power relative to the (shot + electronic) reference."""
    eta = check_efficiency(eta_opt, "eta_opt") * check_efficiency(eta_el, "eta_el")
    return 1.0 + eta * (variance_at_phase(state, theta) - 1.0)


def trace_noise_sigma(esa: EsaConfig) -> float:
    """Relative std of a video-filtered power reading, 1/sqrt(rbw/(2 vbw))."""
    return math.sqrt(2.0 * esa.vbw / esa.rbw)


def trace_noise_sigma_db(esa: EsaConfig) -> float:
    return DB_PER_NEPER_POWER * trace_noise_sigma(esa)


def video_filter(x: np.ndarray, dt: float, vbw: float, initial: float | None = None) -> np.ndarray:
    """Single-pole low-pass at ``vbw`` applied to a power sequence.

    Exact discretization for a piecewise-constant input; the output stays
    within the convex hull of the input and the initial state.
    """
    alpha = -math.expm1(-2.0 * math.pi * vbw * dt)
    y0 = x[0] if initial is None else initial
    y, _ = sps.lfilter([alpha], [1.0, alpha - 1.0], x, zi=[(1.0 - alpha) * y0])
    return y


def _resolve_eta_el(spec: DetectorSpec, f_center: float) -> float:
    try:
        return eta_el_at(spec, f_center)
    except NoShotNoiseVisibility:
        return 0.0


def _expected_level(kind, theta, state, eta_opt, eta_el):
    if eta_el == 0.0 or kind == "shot_reference":
        # blocked signal, or everything seen is electronic floor
        return np.ones_like(theta)
    if kind == "electronic_floor":
        return np.full_like(theta, 1.0 - eta_el)
    return normalized_power(theta, state, eta_opt, eta_el)


def simulate_trace_analytic(
    state: QuadratureVariances,
    budget: LossBudget,
    spec: DetectorSpec,
    sweep: SweepConfig,
    esa: EsaConfig,
    seed: int,
    kind: TraceKind = "signal",
    noise: bool = True,
) -> EsaTrace:
    if kind not in TRACE_KINDS:
        raise DomainError(f"unknown trace kind {kind!r}")
    eta_opt = budget.optical
    eta_el = _resolve_eta_el(spec, esa.f_center)

    trace_dt = esa.duration / (esa.n_points - 1)
    dt_target = 1.0 / (sweep.f_mod * _SWEEP_OVERSAMPLING)
    m = max(1, math.ceil(trace_dt / dt_target))
    dt = trace_dt / m
    n_warm = math.ceil(10.0 * esa.video_tau / dt)
    n_fine = n_warm + m * (esa.n_points - 1) + 1
    t_fine = (np.arange(n_fine) - n_warm) * dt

    theta = phase_at(t_fine, sweep)
    level = _expected_level(kind, theta, state, eta_opt, eta_el)
    smoothed = video_filter(level, dt, esa.vbw)
    p = smoothed[n_warm::m]

    if noise:
        sigma = trace_noise_sigma(esa)
        shape = 1.0 / sigma**2
        # averaged Gaussian-noise power: gamma with mean 1, relative std sigma
        p = p * _generator(seed).gamma(shape, 1.0 / shape, size=p.size)

    return EsaTrace(
        meta=esa,
        kind=kind,
        t=esa.times(),
        p_db=10.0 * np.log10(p),
        non_detecting=eta_el == 0.0,
    )


def mc_sample_rate(esa: EsaConfig) -> float:
    return 4.0 * (esa.f_center + esa.rbw)


def _bandpass(esa: EsaConfig, fs: float):
    lo = esa.f_center - esa.rbw / 2.0
    hi = esa.f_center + esa.rbw / 2.0
    sos = sps.butter(4, [lo, hi], btype="bandpass", fs=fs, output="sos")
    # output variance for unit-variance white input: mean |H|^2 over [0, pi]
    _, h = sps.sosfreqz(sos, worN=1 << 20)
    gain = float(np.mean(np.abs(h) ** 2))
    return sos, gain


def simulate_trace_montecarlo(
    state: QuadratureVariances,
    budget: LossBudget,
    spec: DetectorSpec,
    sweep: SweepConfig,
    esa_scaled: EsaConfig,
    seed: int,
    kind: TraceKind = "signal",
) -> EsaTrace:
    """Time-domain photocurrent simulation; the oracle for the analytic path."""
    if kind not in TRACE_KINDS:
        raise DomainError(f"unknown trace kind {kind!r}")
    esa = esa_scaled
    fs = mc_sample_rate(esa)
    if fs > MAX_MC_SAMPLE_RATE:
        raise ConfigurationError(
            f"Monte Carlo needs {fs:.4g} samples/s (4*(f_center + rbw)); "
            f"limit is {MAX_MC_SAMPLE_RATE:.4g}. Scale f_center and rbw down.",
            path="esa",
        )
    warm = 15.0 * esa.video_tau + 20.0 / esa.rbw
    n_warm = math.ceil(warm * fs)
    n_total = n_warm + math.ceil(esa.duration * fs) + 1
    if n_total > MAX_MC_SAMPLES:
        raise ConfigurationError(
            f"Monte Carlo record of {n_total} samples exceeds {MAX_MC_SAMPLES}",
            path="esa.duration",
        )

    eta_opt = budget.optical
    eta_el = _resolve_eta_el(spec, esa.f_center)
    if kind == "shot_reference":
        state = QuadratureVariances.vacuum()
    w_x, w_p = math.sqrt(state.v_max), math.sqrt(state.v_min)
    optical = 0.0 if kind == "electronic_floor" else math.sqrt(eta_el)
    electronic = math.sqrt(1.0 - eta_el)

    sos, gain = _bandpass(esa, fs)
    bp_state = np.zeros((sos.shape[0], 2))
    alpha = -math.expm1(-2.0 * math.pi * esa.vbw / fs)
    video_state = np.zeros(1)

    pick = n_warm + np.rint(esa.times() * fs).astype(np.int64)
    out = np.empty(esa.n_points)
    rng = _generator(seed)
    for start in range(0, n_total, _MC_CHUNK):
        n = min(_MC_CHUNK, n_total - start)
        t = (np.arange(start, start + n) - n_warm) / fs
        a, b, c, e = rng.standard_normal((4, n))
        current = electronic * e
        if optical:
            theta = phase_at(t, sweep)
            quad = np.cos(theta) * w_x * a + np.sin(theta) * w_p * b
            field_ = math.sqrt(eta_opt) * quad + math.sqrt(1.0 - eta_opt) * c
            current += optical * field_
        band, bp_state = sps.sosfilt(sos, current, zi=bp_state)
        power = band * band / gain
        video, video_state = sps.lfilter(
            [alpha], [1.0, alpha - 1.0], power, zi=video_state
        )
        sel = (pick >= start) & (pick < start + n)
        out[sel] = video[pick[sel] - start]

    return EsaTrace(
        meta=esa,
        kind=kind,
        t=esa.times(),
        p_db=10.0 * np.log10(out),
        non_detecting=eta_el == 0.0,
    )
