import pytest

from desksense.context import ScreenContext, WorldContext
from desksense.loops import (DecisionError, IntervalSnapshot, LoopDecision,
                             RuleBasedMockReasoner, build_minute_bundle,
                             build_tri_minute_bundle, generate_ticks,
                             DISTRACTION_MESSAGE, POSTURE_MESSAGE,
                             STRESS_MESSAGE, STUCK_MESSAGE, TASK_TIPS)

PREFS = {"tone": "supportive", "proactivity": "normal", "task": None}


def snap(t=135.0, posture=80, working=True, task="other", activity="idle desktop",
         description="A mostly empty desktop.", posture_none=False, world_none=False,
         screen_none=False):
    posture_doc = None if posture_none else {
        "overall_score": posture, "shoulder_score": posture, "neck_score": posture,
        "back_score": posture, "current_posture_category": "AVERAGE",
        "feedback": "x",
    }
    world = None if world_none else WorldContext(
        ("working - coding" if working else "distracted - scrolling social media"),
        "scene")
    screen = None if screen_none else ScreenContext(activity, task, description)
    return IntervalSnapshot(t=t, world_view=world, posture=posture_doc, screenshot=screen)


def minute_bundle(snaps, prev="session start"):
    return build_minute_bundle(snaps, prev)


def lf_entry(level="normal", confidence=60, score=20, fatigue=False, missing=False):
    if missing:
        return {"ecg_data": None, "pupil_data": None, "min_summary": "m"}
    return {
        "ecg_data": {
            "hrv_metrics": {"heart_rate": "75.0 bpm (change: 0.0%)",
                            "sdnn": "50.00 ms (change: 0.0%)",
                            "rmssd": "40.00 ms (change: 0.0%)",
                            "pnn20": "50.0% (change: 0.0%)",
                            "pnn50": "20.0% (change: 0.0%)"},
            "stress_analysis": {"level": level, "confidence": confidence,
                                "interpretation": "i"},
            "practical_insight": "p",
        },
        "pupil_data": {
            "pupil": {"summary": {"level": "low", "score": score, "confidence": 0.9,
                                  "interpretation": "i"},
                      "pupillary_response": {"interpretation": "i"},
                      "asymmetry_insight": "a"},
            "gaze_behavior": {"fixation_insight": "f", "saccade_insight": "s",
                              "fatigue_warning": fatigue},
            "practical_insight": "p",
        },
        "min_summary": "m",
    }


class TestDecisionType:
    def test_emptiness_invariants_enforced(self):
        with pytest.raises(DecisionError):
            LoopDecision(True, "posture", "", False, "none", "", "s")
        with pytest.raises(DecisionError):
            LoopDecision(False, "none", "msg", False, "none", "", "s")
        with pytest.raises(DecisionError):
            LoopDecision(False, "none", "", True, "data science", "", "s")

    def test_enum_checked(self):
        with pytest.raises(DecisionError):
            LoopDecision(True, "sleepiness", "m", False, "none", "", "s")

    def test_doc_round_trip(self):
        d = LoopDecision(True, "posture", POSTURE_MESSAGE, False, "none", "", "sum")
        doc = d.to_doc()
        assert doc["intervention"] == "Yes" and doc["suggestion"] == "No"
        assert LoopDecision.from_doc(doc).intervention_type == "posture"

    def test_lf_distracted_variant_normalized(self):
        doc = LoopDecision(True, "distraction", "m", False, "none", "", "s").to_doc()
        doc["intervention_type"] = "distracted"
        assert LoopDecision.from_doc(doc).intervention_type == "distraction"


class TestBundles:
    def test_minute_bundle_shape(self):
        bundle = minute_bundle([snap(t) for t in (135.0, 150.0, 165.0, 180.0)])
        data = bundle["data"]
        assert set(data) == {"0", "1", "2", "3", "prev_min_summary"}
        entry = data["0"]
        assert set(entry) == {"world_view_analysis", "posture_data", "screenshot_analysis"}

    def test_minute_bundle_requires_four(self):
        with pytest.raises(ValueError):
            minute_bundle([snap()] * 3)

    def test_tri_minute_bundle_shape(self):
        bundle = build_tri_minute_bundle([lf_entry()] * 3, "session start")
        data = bundle["data"]
        assert set(data) == {"session_summary", "0", "1", "2"}
        assert set(data["1"]) == {"ecg_data", "pupil_data", "min_summary"}

    def test_null_modalities_pass_through(self):
        bundle = minute_bundle([snap(posture_none=True, world_none=True,
                                     screen_none=True)] * 2 + [snap()] * 2)
        assert bundle["data"]["0"]["posture_data"] is None
        assert bundle["data"]["0"]["world_view_analysis"] is None


class TestMockHfLoop:
    def test_sustained_poor_posture_triggers_intervention(self):
        reasoner = RuleBasedMockReasoner()
        snaps = [snap(posture=40), snap(posture=38), snap(posture=42), snap(posture=80)]
        d = reasoner.decide_hf(minute_bundle(snaps), PREFS, [])
        assert d.intervention and d.intervention_type == "posture"
        assert d.i_message == POSTURE_MESSAGE
        assert not d.suggestion

    def test_two_poor_snapshots_do_not_trigger(self):
        reasoner = RuleBasedMockReasoner()
        snaps = [snap(posture=40), snap(posture=40), snap(posture=80), snap(posture=80)]
        d = reasoner.decide_hf(minute_bundle(snaps), PREFS, [])
        assert not d.intervention

    def test_single_anomalous_snapshot_never_triggers(self):
        reasoner = RuleBasedMockReasoner()
        snaps = [snap(posture=80), snap(posture=10, working=False), snap(posture=80),
                 snap(posture=80)]
        d = reasoner.decide_hf(minute_bundle(snaps), PREFS, [])
        assert not d.intervention

    def test_sustained_distraction_with_mismatch_triggers(self):
        reasoner = RuleBasedMockReasoner()
        snaps = [snap(working=False, task="other")] * 3 + [snap()]
        d = reasoner.decide_hf(minute_bundle(snaps), PREFS, [])
        assert d.intervention_type == "distraction"
        assert d.i_message == DISTRACTION_MESSAGE

    def test_academic_browsing_during_litreview_is_not_distraction(self):
        reasoner = RuleBasedMockReasoner()
        prefs = dict(PREFS, task="literature review")
        snaps = [snap(task="literature review",
                      activity="browsing an academic search engine",
                      description="Scanning search results for survey papers.")] * 4
        d = reasoner.decide_hf(minute_bundle(snaps), prefs, [])
        assert not d.intervention or d.intervention_type != "distraction"

    def test_distracted_gaze_but_on_task_screen_does_not_trigger(self):
        reasoner = RuleBasedMockReasoner()
        prefs = dict(PREFS, task="data science")
        snaps = [snap(working=False, task="data science")] * 4
        d = reasoner.decide_hf(minute_bundle(snaps), prefs, [])
        assert d.intervention_type != "distraction" or not d.intervention

    def test_suggestion_for_canonical_task(self):
        reasoner = RuleBasedMockReasoner()
        snaps = [snap(task="data science", activity="data processing",
                      description="Cleaning a dataset.")] * 4
        d = reasoner.decide_hf(minute_bundle(snaps), PREFS, [])
        assert d.suggestion and d.suggestion_type == "data science"
        assert d.s_message == TASK_TIPS["data science"]
        assert not d.intervention

    def test_repeated_errors_produce_stuck_message(self):
        reasoner = RuleBasedMockReasoner()
        snaps = [snap(task="front-end web development", activity="debugging",
                      description="Console shows repeated TypeError errors.")] * 4
        d = reasoner.decide_hf(minute_bundle(snaps), PREFS, [])
        assert d.suggestion and d.s_message == STUCK_MESSAGE

    def test_suggestion_rate_limited_to_every_third_cycle(self):
        reasoner = RuleBasedMockReasoner()
        snaps = [snap(task="data science", activity="a", description="d")] * 4
        got = []
        for _ in range(6):
            got.append(reasoner.decide_hf(minute_bundle(snaps), PREFS, []).suggestion)
        assert got == [True, False, False, True, False, False]

    def test_no_suggestion_for_unknown_task(self):
        reasoner = RuleBasedMockReasoner()
        d = reasoner.decide_hf(minute_bundle([snap(task="other")] * 4), PREFS, [])
        assert not d.suggestion and not d.intervention

    def test_null_modalities_are_non_triggering(self):
        reasoner = RuleBasedMockReasoner()
        snaps = [snap(posture_none=True, world_none=True, screen_none=True)] * 4
        d = reasoner.decide_hf(minute_bundle(snaps), PREFS, [])
        assert not d.intervention and not d.suggestion


class TestMockLfLoop:
    def test_sustained_high_stress_triggers(self):
        reasoner = RuleBasedMockReasoner()
        bundle = build_tri_minute_bundle(
            [lf_entry(level="high", confidence=85)] * 3, "session start")
        d = reasoner.decide_lf(bundle, PREFS, [])
        assert d.intervention and d.intervention_type == "stress"
        assert d.i_message == STRESS_MESSAGE

    def test_high_stress_low_confidence_does_not_trigger(self):
        reasoner = RuleBasedMockReasoner()
        bundle = build_tri_minute_bundle(
            [lf_entry(level="high", confidence=60)] * 3, "s")
        assert not reasoner.decide_lf(bundle, PREFS, []).intervention

    def test_two_of_three_high_minutes_do_not_trigger(self):
        reasoner = RuleBasedMockReasoner()
        bundle = build_tri_minute_bundle(
            [lf_entry(level="high", confidence=90)] * 2 + [lf_entry()], "s")
        assert not reasoner.decide_lf(bundle, PREFS, []).intervention

    def test_sustained_load_with_fatigue_triggers(self):
        reasoner = RuleBasedMockReasoner()
        bundle = build_tri_minute_bundle(
            [lf_entry(score=95, fatigue=True)] * 3, "s")
        d = reasoner.decide_lf(bundle, PREFS, [])
        assert d.intervention and d.intervention_type == "cognitive load"

    def test_high_load_without_fatigue_does_not_trigger(self):
        reasoner = RuleBasedMockReasoner()
        bundle = build_tri_minute_bundle([lf_entry(score=95, fatigue=False)] * 3, "s")
        assert not reasoner.decide_lf(bundle, PREFS, []).intervention

    def test_nominal_minutes_produce_no_action(self):
        reasoner = RuleBasedMockReasoner()
        d = reasoner.decide_lf(build_tri_minute_bundle([lf_entry()] * 3, "s"), PREFS, [])
        assert not d.intervention and not d.suggestion
        assert "stable" in d.summary

    def test_missing_physiology_is_non_triggering(self):
        reasoner = RuleBasedMockReasoner()
        bundle = build_tri_minute_bundle([lf_entry(missing=True)] * 3, "s")
        d = reasoner.decide_lf(bundle, PREFS, [])
        assert not d.intervention


class TestScheduling:
    def counts(self, duration):
        ticks = generate_ticks(duration)
        return {kind: sum(1 for t in ticks if t.kind == kind)
                for kind in ("report", "snapshot", "hf", "lf")}

    def test_ten_minute_session_counts(self):
        c = self.counts(600.0)
        assert c["snapshot"] == 32
        assert c["hf"] == 8
        assert c["lf"] == 2
        assert c["report"] == 600

    def test_two_minute_session_has_no_loop_ticks(self):
        c = self.counts(120.0)
        assert c["hf"] == 0 and c["lf"] == 0 and c["snapshot"] == 0

    def test_lf_coincides_with_every_third_hf(self):
        ticks = generate_ticks(1200.0)
        hf_times = [t.t for t in ticks if t.kind == "hf"]
        lf_times = [t.t for t in ticks if t.kind == "lf"]
        assert lf_times == hf_times[2::3]

    def test_ticks_ordered_with_snapshot_before_hf_before_lf(self):
        ticks = generate_ticks(400.0)
        at_300 = [t.kind for t in ticks if t.t == 300.0]
        assert at_300 == ["report", "snapshot", "hf", "lf"]
