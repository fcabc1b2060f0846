import math

import numpy as np
import pytest

from desksense import synth
from desksense.gaze import (GazeAnalyzer, GazeBaseline, GazeReport,
                            PupilFeatures, angular_velocities,
                            detect_fixations, detect_saccades, filter_pupil,
                            score_cognitive_load, segment)
from desksense.synth import direction, scripted_gaze

RATE = 120.0
DT = 1.0 / RATE

# Fixture baselines for the load-ensemble reference numbers.
C2_BASELINE = GazeBaseline(pupil_mm=4.0, asymmetry_pct=0.0, fixation_s=0.40,
                           saccade_per_min=43.3, loss_rate=0.02)


def stationary(duration, az=0.0, el=0.0, jitter=0.0, seed=0):
    return scripted_gaze([(az, el, duration)], jitter_deg=jitter, seed=seed)


class TestFixations:
    def test_stationary_one_second_single_fixation(self):
        trace = stationary(1.0)
        fx = detect_fixations(trace.t, trace.directions)
        assert len(fx) == 1
        assert fx[0].duration == pytest.approx(1.0, abs=1.5 * DT)

    def test_alternating_five_degrees_no_fixations(self):
        segs = [(5.0 if i % 2 else -5.0, 0.0, 0.1) for i in range(20)]
        trace = scripted_gaze(segs, transit_samples=1)
        assert detect_fixations(trace.t, trace.directions) == []

    def test_two_dwells_with_jump(self):
        trace = scripted_gaze([(0.0, 0.0, 0.4), (10.0, 0.0, 0.5)])
        fx = detect_fixations(trace.t, trace.directions)
        assert len(fx) == 2
        assert fx[0].duration == pytest.approx(0.4, abs=1.5 * DT)
        assert fx[1].duration == pytest.approx(0.5, abs=1.5 * DT)

    def test_empty_input(self):
        assert detect_fixations([], []) == []

    def test_jittered_dwell_still_one_fixation(self):
        trace = stationary(1.0, jitter=0.2, seed=4)
        fx = detect_fixations(trace.t, trace.directions)
        assert len(fx) == 1

    def test_rotation_invariance(self):
        trace = scripted_gaze([(0.0, 0.0, 0.6), (8.0, 2.0, 0.7), (1.0, -5.0, 0.5)],
                              jitter_deg=0.15, seed=9)
        fx0 = detect_fixations(trace.t, trace.directions)
        theta = 0.7
        rot = np.array([[math.cos(theta), -math.sin(theta), 0.0],
                        [math.sin(theta), math.cos(theta), 0.0],
                        [0.0, 0.0, 1.0]])
        rotated = trace.directions @ rot.T
        fx1 = detect_fixations(trace.t, rotated)
        assert len(fx0) == len(fx1)
        assert [f.start for f in fx0] == [f.start for f in fx1]
        assert [f.duration for f in fx0] == [f.duration for f in fx1]


class TestSaccades:
    def test_fast_jump_is_one_saccade_with_expected_velocity(self):
        # ~10 degrees over 20 ms of transit
        trace = scripted_gaze([(0.0, 0.0, 0.4), (10.0, 0.0, 0.4)],
                              transit_samples=2)
        sacc = detect_saccades(trace.t, trace.directions)
        assert len(sacc) == 1
        assert sacc[0].peak_velocity_deg_s == pytest.approx(trace.true_saccade_velocity, rel=0.05)
        assert sacc[0].peak_velocity_deg_s > 400

    def test_stationary_has_no_saccades(self):
        trace = stationary(1.0)
        assert detect_saccades(trace.t, trace.directions) == []

    def test_slow_drift_below_threshold(self):
        # 10 deg/s drift: one sample step of 10/120 degrees
        n = 120
        t = np.arange(n) * DT
        dirs = np.array([direction(10.0 * ti, 0.0) for ti in t])
        assert detect_saccades(t, dirs) == []

    def test_runs_are_merged(self):
        trace = scripted_gaze([(0.0, 0.0, 0.4), (12.0, 0.0, 0.4)], transit_samples=4)
        sacc = detect_saccades(trace.t, trace.directions)
        assert len(sacc) == 1
        assert sacc[0].duration == pytest.approx(4 * DT, abs=1e-9)


class TestSegmentation:
    def test_partition_is_disjoint(self):
        trace = scripted_gaze([(0.0, 0.0, 0.6), (9.0, 0.0, 0.7), (0.0, 4.0, 0.8)],
                              jitter_deg=0.2, seed=12)
        fixations, saccades = segment(trace.t, trace.directions)
        for s in saccades:
            for f in fixations:
                # a saccade may only touch a fixation at its boundary samples
                assert s.start >= f.start + f.duration - 1e-9 or \
                    s.start + s.duration <= f.start + 1e-9

    def test_expected_counts_on_scripted_trace(self):
        trace = scripted_gaze([(0.0, 0.0, 0.5), (8.0, 0.0, 0.5), (16.0, 0.0, 0.5)])
        fixations, saccades = segment(trace.t, trace.directions)
        assert len(fixations) == 3
        assert len(saccades) == 2


class TestPupilFiltering:
    def test_constant_series(self):
        n = 240
        t = np.arange(n) * DT
        feats = filter_pupil(t, np.full(n, 4.0), np.full(n, 4.0), np.full(n, 0.9))
        assert feats.smoothed_mm == pytest.approx(4.0, abs=1e-9)
        assert feats.velocity_mm_s == pytest.approx(0.0, abs=1e-9)
        assert feats.asymmetry_pct == pytest.approx(0.0, abs=1e-9)

    def test_asymmetry_formula(self):
        n = 240
        t = np.arange(n) * DT
        feats = filter_pupil(t, np.full(n, 4.0), np.full(n, 3.75), np.full(n, 0.9))
        assert feats.asymmetry_pct == pytest.approx(6.45, abs=0.01)

    def test_change_vs_baseline_fixture(self):
        # constructed current diameters: +5.2 % mean change, 6.4 % asymmetry
        n = 240
        t = np.arange(n) * DT
        left = np.full(n, 4.208 * 1.032)
        right = np.full(n, 4.208 * 0.968)
        feats = filter_pupil(t, left, right, np.full(n, 0.9), baseline_mm=4.0)
        assert feats.change_pct == pytest.approx(5.2, abs=0.1)
        assert feats.asymmetry_pct == pytest.approx(6.4, abs=0.1)

    def test_insufficient_valid_samples_unavailable(self):
        n = 40
        t = np.arange(n) * DT
        conf = np.full(n, 0.5)   # everything blink-gated
        assert filter_pupil(t, np.full(n, 4.0), np.full(n, 4.0), conf) is None

    def test_confidence_gating_drops_blink_dips(self):
        n = 240
        t = np.arange(n) * DT
        left = np.full(n, 4.0)
        left[100:110] = 1.0        # blink artifact
        conf = np.full(n, 0.9)
        conf[100:110] = 0.2
        feats = filter_pupil(t, left, left.copy(), conf)
        assert feats.smoothed_mm == pytest.approx(4.0, abs=1e-6)
        assert feats.valid_fraction == pytest.approx(230 / 240)

    def test_iqr_outliers_removed(self):
        n = 240
        t = np.arange(n) * DT
        left = np.full(n, 4.0)
        left[120] = 9.0            # tracker glitch at full confidence
        feats = filter_pupil(t, left, np.full(n, 4.0), np.full(n, 0.9))
        assert feats.smoothed_mm == pytest.approx(4.0, abs=1e-3)

    def test_smoothing_preserves_linear_ramp_velocity(self):
        n = 360
        t = np.arange(n) * DT
        ramp = 4.0 + 0.1 * t       # 0.1 mm/s dilation
        feats = filter_pupil(t, ramp, ramp.copy(), np.full(n, 0.9))
        assert feats.velocity_mm_s == pytest.approx(0.1, rel=0.05)


class TestCognitiveLoad:
    def test_reference_ensemble_triple(self):
        est = score_cognitive_load(pupil_change_pct=5.2, asymmetry_pct=6.4,
                                   mean_fixation_s=0.28, saccade_per_min=82.3,
                                   baseline=C2_BASELINE)
        assert est.score == 65
        assert est.level == "medium"
        assert est.confidence == 0.76

    def test_all_indicators_at_baseline(self):
        est = score_cognitive_load(0.0, 0.0, C2_BASELINE.fixation_s,
                                   C2_BASELINE.saccade_per_min, C2_BASELINE)
        assert est.score == 0 and est.level == "low"
        assert est.confidence == 1.0

    def test_elevated_indicators_exceed_90(self):
        est = score_cognitive_load(pupil_change_pct=20.0, asymmetry_pct=None,
                                   mean_fixation_s=0.20, saccade_per_min=86.6,
                                   baseline=C2_BASELINE)
        assert est.score > 90
        assert est.level == "high"

    def test_missing_pupil_renormalizes_and_reduces_confidence(self):
        full = score_cognitive_load(0.0, 0.0, 0.28, 82.3, C2_BASELINE)
        partial = score_cognitive_load(None, None, 0.28, 82.3, C2_BASELINE)
        assert partial.confidence < full.confidence
        assert 0 <= partial.score <= 100

    def test_no_indicators_floor(self):
        est = score_cognitive_load(None, None, None, None, C2_BASELINE)
        assert est.score == 0 and est.level == "low" and est.confidence == 0.0

    @pytest.mark.parametrize("kwargs_lo,kwargs_hi", [
        (dict(pupil_change_pct=2.0), dict(pupil_change_pct=8.0)),
        (dict(asymmetry_pct=1.0), dict(asymmetry_pct=7.0)),
        (dict(mean_fixation_s=0.38), dict(mean_fixation_s=0.25)),
        (dict(saccade_per_min=50.0), dict(saccade_per_min=80.0)),
    ])
    def test_monotone_in_each_indicator(self, kwargs_lo, kwargs_hi):
        base_kwargs = dict(pupil_change_pct=3.0, asymmetry_pct=2.0,
                           mean_fixation_s=0.30, saccade_per_min=60.0)
        lo = score_cognitive_load(**{**base_kwargs, **kwargs_lo}, baseline=C2_BASELINE)
        hi = score_cognitive_load(**{**base_kwargs, **kwargs_hi}, baseline=C2_BASELINE)
        assert hi.score >= lo.score

    def test_banding_is_total(self):
        for chg in np.linspace(-5, 25, 40):
            est = score_cognitive_load(float(chg), 0.0, 0.40, 43.3, C2_BASELINE)
            assert est.level in ("low", "medium", "high")


class TestAnalyzer:
    def feed(self, analyzer, duration=130.0, seed=7, **kw):
        t, dirs, pl, pr, conf = synth.gaze_stream(duration, seed=seed, **kw)
        for ti, d, l, r, c in zip(t, dirs, pl, pr, conf):
            analyzer.ingest(ti, d, l, r, c)

    def test_no_report_before_calibration(self):
        analyzer = GazeAnalyzer()
        self.feed(analyzer, duration=100.0)
        assert analyzer.report_at(100.0) is None

    def test_steady_stream_reports_low_load(self):
        analyzer = GazeAnalyzer()
        self.feed(analyzer, duration=185.0)
        rep = analyzer.report_at(180.0)
        assert rep is not None
        assert rep.load.level == "low"
        assert not rep.fatigue
        doc = rep.to_doc()
        assert set(doc) == {"pupil", "gaze_behavior", "practical_insight"}
        assert set(doc["pupil"]) == {"summary", "pupillary_response", "asymmetry_insight"}
        assert set(doc["gaze_behavior"]) == {"fixation_insight", "saccade_insight",
                                             "fatigue_warning"}

    def test_baseline_values_are_sane(self):
        analyzer = GazeAnalyzer()
        self.feed(analyzer, duration=130.0)
        base = analyzer.establish_baseline()
        assert base.pupil_mm == pytest.approx(4.0, abs=0.05)
        assert base.saccade_per_min == pytest.approx(30.0, abs=5.0)
        assert base.fixation_s > 1.0

    def test_report_document_strings_carry_numbers(self):
        analyzer = GazeAnalyzer()
        self.feed(analyzer, duration=130.0)
        doc = analyzer.report_at(125.0).to_doc()
        assert "per minute" in doc["gaze_behavior"]["saccade_insight"]
        assert "s)" in doc["gaze_behavior"]["fixation_insight"]
