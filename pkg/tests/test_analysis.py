import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from homodyne_lab.analysis import (
    ExtremaConfig,
    analyze_traces,
    estimate_extrema,
    fit_pure_state,
    frequency_sweep,
    invert_db,
    invert_loss,
    normalize_to_shot,
)
from homodyne_lab.config import bench_default
from homodyne_lab.detector_model import ClearanceCurve, DetectorSpec
from homodyne_lab.errors import ConfigurationError, DomainError, UnphysicalMeasurementError
from homodyne_lab.esa_sim import EsaConfig, EsaTrace, SweepConfig, normalized_power, simulate_trace_analytic
from homodyne_lab.gaussian_core import apply_loss, db_from_variance, pure_state_from_r
from homodyne_lab.pump_chain import PumpChainSpec

CFG = ExtremaConfig()
BENCH_FREQS = [0.05e9, 0.25e9, 0.75e9, 1.5e9, 2.5e9, 3.5e9, 4e9]


def _flat(level_db, n=1001, **esa_kw):
    esa = EsaConfig(**{"f_center": 50e6, "n_points": n, **esa_kw})
    return EsaTrace(esa, "signal", esa.times(), np.full(n, float(level_db)))


def _trace(state, budget, det, seed=1, noise=True, kind="signal", sweep=SweepConfig(), **esa_kw):
    esa = EsaConfig(**{"f_center": 50e6, **esa_kw})
    return simulate_trace_analytic(state, budget, det, sweep, esa, seed, kind=kind, noise=noise)


class TestNormalize:
    def test_identical(self):
        out = normalize_to_shot(_flat(0.7), _flat(0.7))
        np.testing.assert_allclose(out.p_db, 0.0, atol=1e-12)

    def test_offset(self):
        out = normalize_to_shot(_flat(3.0), _flat(0.0))
        np.testing.assert_allclose(out.p_db, 3.0)

    def test_mismatched_settings(self):
        with pytest.raises(ConfigurationError):
            normalize_to_shot(_flat(0.0), _flat(0.0, vbw=2e3))

    def test_vacuum_signal_normalizes_to_zero(self, ideal_detector, budget_051):
        vac = pure_state_from_r(0.0)
        sig = _trace(vac, budget_051, ideal_detector, seed=1)
        shot = _trace(vac, budget_051, ideal_detector, seed=2, kind="shot_reference")
        out = normalize_to_shot(sig, shot)
        sigma = 0.0434 / math.sqrt(sig.t.size)
        assert out.mean_db() == pytest.approx(0.0, abs=4 * math.sqrt(2) * sigma)


class TestEstimateExtrema:
    def test_unsmoothed_recovers_analytic_extrema(self, crystal_state, ideal_detector, budget_051):
        tr = _trace(crystal_state, budget_051, ideal_detector, noise=False, vbw=20e6)
        est = estimate_extrema(tr, CFG)
        lo = db_from_variance(normalized_power(math.pi / 2, crystal_state, 0.51, 1.0))
        hi = db_from_variance(normalized_power(math.pi, crystal_state, 0.51, 1.0))
        assert est.m_sq == pytest.approx(lo, abs=0.01)
        assert est.m_asq == pytest.approx(hi, abs=0.01)

    def test_counts_match_sweep(self, crystal_state, ideal_detector, budget_051):
        # an amplitude-pi sine visits pi/2 (mod pi) four times and 0 (mod pi) four times per period
        tr = _trace(crystal_state, budget_051, ideal_detector, noise=False, vbw=20e6)
        est = estimate_extrema(tr, ExtremaConfig(edge_exclusion=0.0))
        assert est.n_minima == 40
        assert est.n_maxima == 39  # the maxima at t=0 and t=duration are trace edges

    def test_flat_trace_undetectable(self):
        est = estimate_extrema(_flat(0.0), CFG)
        assert not est.detectable
        assert est.n_minima == est.n_maxima == 0
        assert math.isnan(est.m_sq) and math.isnan(est.m_asq)

    def test_needs_two_periods(self):
        with pytest.raises(DomainError):
            estimate_extrema(_flat(0.0, duration=0.004), CFG)

    @pytest.mark.parametrize("vbw", [2e3, 5e3, 2e4])
    def test_tracks_filtered_trace(self, crystal_state, ideal_detector, budget_051, vbw):
        tr = _trace(crystal_state, budget_051, ideal_detector, noise=False, vbw=vbw, n_points=5001)
        est = estimate_extrema(tr, CFG)
        assert est.m_sq == pytest.approx(tr.p_db.min(), abs=0.02)

    def test_video_filter_at_ten_times_sweep_rate_still_dilutes(self, crystal_state, ideal_detector, budget_051):
        # the minima are crossed in ~0.5 ms, so a 2 kHz video filter is not transparent
        tr = _trace(crystal_state, budget_051, ideal_detector, noise=False, vbw=2e3)
        est = estimate_extrema(tr, CFG)
        assert est.m_sq - (-1.2988) > 0.1

    def test_triangular_sweep(self, crystal_state, ideal_detector, budget_051):
        sweep = SweepConfig(waveform="triangular", amplitude=math.pi / 2, offset=math.pi / 2)
        tr = _trace(crystal_state, budget_051, ideal_detector, noise=False, vbw=20e6, sweep=sweep)
        est = estimate_extrema(tr, CFG)
        assert est.m_sq == pytest.approx(-1.2988, abs=0.01)
        assert est.n_minima == 19  # theta sweeps [0, pi]: one minimum per half period

    def test_calibration_target(self, ideal_detector, budget_051):
        state, eta = fit_pure_state(-0.15, 0.16)
        det_budget = replace(budget_051, eta_path=eta)
        tr = _trace(state, det_budget, ideal_detector, noise=False, vbw=20e6, n_points=10001)
        est = estimate_extrema(tr, ExtremaConfig(min_prominence=0.05))
        assert est.m_sq == pytest.approx(-0.15, abs=0.01)
        assert est.m_asq == pytest.approx(0.16, abs=0.01)

    def test_vacuum_false_positive_rate(self, ideal_detector, budget_051):
        vac = pure_state_from_r(0.0)
        hits = 0
        for seed in range(200):
            sig = _trace(vac, budget_051, ideal_detector, seed=2 * seed)
            shot = _trace(vac, budget_051, ideal_detector, seed=2 * seed + 1, kind="shot_reference")
            hits += estimate_extrema(normalize_to_shot(sig, shot), CFG).detectable
        assert hits / 200 < 0.05


class TestFitPureState:
    def test_measured_extrema(self):
        # closed form: v = (1 - 10^-0.015)/(10^0.016 - 1), eta = (1 - 10^-0.015)/(1 - v)
        state, eta = fit_pure_state(-0.15, 0.16)
        assert state.v_min == pytest.approx(0.9046244098023445, rel=1e-12)
        assert eta == pytest.approx(0.35595188391317705, rel=1e-12)

    def test_round_trip(self):
        state = pure_state_from_r(0.4)
        seen = apply_loss(state, 0.3)
        fitted, eta = fit_pure_state(db_from_variance(seen.v_min), db_from_variance(seen.v_max))
        assert fitted.v_min == pytest.approx(state.v_min, rel=1e-12)
        assert eta == pytest.approx(0.3, rel=1e-12)

    def test_rejects_no_squeezing(self):
        with pytest.raises(DomainError):
            fit_pure_state(0.1, 0.2)


class TestInvertLoss:
    def test_vacuum(self):
        assert invert_loss(1.0, 0.37) == pytest.approx(1.0, rel=1e-15)

    def test_measured_pair(self):
        measured = 10 ** (-0.015)
        assert measured == pytest.approx(0.96605, abs=1e-5)
        v = invert_loss(measured, 0.51)
        assert v == pytest.approx(0.9334330960584576, rel=1e-12)
        assert invert_db(-0.15, 0.51) == pytest.approx(-0.2991680471426160, abs=1e-12)

    def test_round_trip_example(self):
        assert invert_loss(0.74152, 0.51) == pytest.approx(0.4931764705882353, rel=1e-12)

    def test_unphysical(self):
        with pytest.raises(UnphysicalMeasurementError, match="0.8"):
            invert_db(-3.0, 0.2)

    @given(st.floats(0.0, 1.0), st.floats(0.05, 1.0))
    def test_round_trip(self, r, eta):
        crystal = pure_state_from_r(r)
        seen = apply_loss(crystal, eta)
        assert invert_loss(seen.v_min, eta) == pytest.approx(crystal.v_min, rel=1e-9)
        assert invert_loss(seen.v_max, eta) == pytest.approx(crystal.v_max, rel=1e-9)


class TestAnalyzeTraces:
    def test_report_invariants(self, crystal_state, ideal_detector, budget_051):
        sig = _trace(crystal_state, budget_051, ideal_detector, seed=1)
        shot = _trace(crystal_state, budget_051, ideal_detector, seed=2, kind="shot_reference")
        rep = analyze_traces(sig, shot, 0.51, CFG)
        assert rep.detectable
        assert rep.m_sq <= 0 <= rep.m_asq
        assert rep.crystal_sq <= rep.m_sq
        assert rep.crystal_asq >= rep.m_asq
        assert rep.n_minima >= 1 and rep.n_maxima >= 1
        assert set(rep.to_dict()) == {
            "f_center_hz", "m_sq_db", "m_asq_db", "n_minima", "n_maxima",
            "eta_assumed", "crystal_sq_db", "crystal_asq_db", "detectable",
        }


@pytest.fixture(scope="module")
def bench_sweep():
    return frequency_sweep(bench_default(), BENCH_FREQS)


class TestFrequencySweep:
    def test_roll_off(self, bench_sweep):
        sigma = 0.0434
        depths = [abs(e.report.m_sq) if e.report.detectable else 0.0 for e in bench_sweep]
        for a, b in zip(depths, depths[1:]):
            assert b <= a + 2 * sigma

    def test_no_squeezing_at_4ghz(self, bench_sweep):
        last = bench_sweep[-1]
        assert last.clearance_db == 0.2
        assert not last.report.detectable
        assert all(e.report.detectable for e in bench_sweep[:-1])

    def test_order_and_columns(self, bench_sweep):
        assert [e.report.f_center for e in bench_sweep] == BENCH_FREQS
        assert list(bench_sweep[0].row()) == [
            "f_hz", "m_sq_db", "m_asq_db", "clearance_db", "eta_el",
            "eta_total", "crystal_sq_db", "crystal_asq_db", "detectable",
        ]

    def test_ideal_receiver_is_flat(self):
        sc = bench_default()
        flat = ClearanceCurve(((1e6, 300.0), (1e10, 300.0)))
        sc = replace(sc, detector=replace(sc.detector, clearance=flat))
        m = [e.report.m_sq for e in frequency_sweep(sc, BENCH_FREQS)]
        assert max(m) - min(m) < 2 * 0.0434

    def test_thread_count_does_not_change_results(self, monkeypatch):
        sc = bench_default()
        one = frequency_sweep(sc, BENCH_FREQS[:3], threads=1)
        monkeypatch.setenv("HOMODYNE_LAB_THREADS", "3")
        many = frequency_sweep(sc, BENCH_FREQS[:3])
        assert [e.row() for e in one] == [e.row() for e in many]

    def test_failures_are_recorded(self):
        sc = bench_default()
        dead = ClearanceCurve(((1e6, 3.0), (1e9, 3.0), (2e9, 0.0)))
        sc = replace(sc, detector=replace(sc.detector, clearance=dead))
        entries = frequency_sweep(sc, [50e6, 3e9])
        assert entries[0].report.detectable and not entries[0].failed
        assert entries[1].failed and not entries[1].report.detectable
        assert "NoShotNoiseVisibility" in entries[1].note

    def test_rejects_bad_frequencies(self):
        with pytest.raises(DomainError):
            frequency_sweep(bench_default(), [])
        with pytest.raises(DomainError):
            frequency_sweep(bench_default(), [-1.0])

    def test_vacuum_scenario(self):
        sc = replace(bench_default(), pump=PumpChainSpec(mu=0.0))
        assert not any(e.report.detectable for e in frequency_sweep(sc, BENCH_FREQS))
