"""Dual-cadence reasoning loop: snapshots, minute/tri-minute bundles, decisions.

Every 15 s a snapshot joins the latest posture report with freshly analyzed
screen and worldview contexts. Four snapshots feed the one-minute loop; three
minute summaries plus per-minute physiology feed the three-minute loop. Both
loops thread their summary into the next bundle.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Protocol

from .context import CANONICAL_TASKS, UNKNOWN, ScreenContext, WorldContext, engagement_flag

SNAPSHOT_EVERY_S = 15.0
HF_EVERY_S = 60.0
LF_EVERY_S = 180.0
REPORT_EVERY_S = 1.0
ACTIVATION_S = 120.0     # loops start after stabilization + baseline capture
PROMPT_WINDOW = 5        # recent user prompts given to the reasoner

INTERVENTION_TYPES = ("stress", "cognitive load", "distraction", "posture",
                      "encouragement", "break suggestion", "none")
SUGGESTION_TYPES = CANONICAL_TASKS + ("none",)

INITIAL_SUMMARY = "session start"
FAILURE_SUMMARY = "reasoning unavailable"

# Messages the deterministic reasoner emits per trigger.
POSTURE_MESSAGE = "Your posture score is low. Try to sit up straight."
DISTRACTION_MESSAGE = "Looks like you're off-task. Let's re-focus on the goal!"
STRESS_MESSAGE = "Your stress levels seem high. Time for a short break."
LOAD_MESSAGE = ("Your eye patterns suggest you might be feeling some fatigue. "
                "Stay hydrated and remember your goal for this task session.")
STUCK_MESSAGE = "Stuck? Have you considered using a different library for this?"
TASK_TIPS = {
    "front-end web development": "If you're working on the frontend, remember to check "
                                 "how it looks on different screen sizes.",
    "data science": "When exploring the data, consider creating some visualizations like "
                    "histograms or scatter plots to spot patterns.",
    "literature review": "As you read, try jotting down the key arguments of each paper "
                         "to build your summary.",
}


class DecisionError(ValueError):
    """Decision document violates the loop output schema."""


@dataclass(frozen=True)
class IntervalSnapshot:
    t: float
    world_view: WorldContext | None
    posture: dict | None          # inner posture_data document
    screenshot: ScreenContext | None

    def to_entry(self) -> dict:
        return {
            "world_view_analysis": self.world_view.to_doc() if self.world_view else None,
            "posture_data": self.posture,
            "screenshot_analysis": self.screenshot.to_doc() if self.screenshot else None,
        }


@dataclass(frozen=True)
class LoopDecision:
    intervention: bool
    intervention_type: str
    i_message: str
    suggestion: bool
    suggestion_type: str
    s_message: str
    summary: str
    confidence: float = 1.0   # carried onto routed specs, not serialized

    def __post_init__(self):
        if self.intervention_type not in INTERVENTION_TYPES:
            raise DecisionError(f"bad intervention_type {self.intervention_type!r}")
        if self.suggestion_type not in SUGGESTION_TYPES:
            raise DecisionError(f"bad suggestion_type {self.suggestion_type!r}")
        if self.intervention != bool(self.i_message):
            raise DecisionError("i_message must be empty iff intervention is 'No'")
        if self.suggestion != bool(self.s_message):
            raise DecisionError("s_message must be empty iff suggestion is 'No'")

    @classmethod
    def none(cls, summary: str) -> "LoopDecision":
        return cls(False, "none", "", False, "none", "", summary)

    def to_doc(self) -> dict:
        return {
            "intervention": "Yes" if self.intervention else "No",
            "intervention_type": self.intervention_type,
            "i_message": self.i_message,
            "suggestion": "Yes" if self.suggestion else "No",
            "suggestion_type": self.suggestion_type,
            "s_message": self.s_message,
            "summary": self.summary,
        }

    @classmethod
    def from_doc(cls, doc: dict, confidence: float = 0.5) -> "LoopDecision":
        try:
            itype = doc["intervention_type"]
            if itype == "distracted":  # LF output variant of the same type
                itype = "distraction"
            return cls(
                intervention=str(doc["intervention"]).strip().lower() == "yes",
                intervention_type=itype,
                i_message=doc["i_message"],
                suggestion=str(doc["suggestion"]).strip().lower() == "yes",
                suggestion_type=doc["suggestion_type"],
                s_message=doc["s_message"],
                summary=doc["summary"],
                confidence=confidence,
            )
        except KeyError as exc:
            raise DecisionError(f"missing decision key {exc}") from exc


def build_minute_bundle(snapshots: list[IntervalSnapshot], prev_min_summary: str) -> dict:
    """One-minute input payload: entries "0".."3" plus the threaded summary."""
    if len(snapshots) != 4:
        raise ValueError(f"a minute bundle needs exactly 4 snapshots, got {len(snapshots)}")
    data = {str(i): snap.to_entry() for i, snap in enumerate(snapshots)}
    data["prev_min_summary"] = prev_min_summary
    return {"data": data}


def build_tri_minute_bundle(minutes: list[dict], session_summary: str) -> dict:
    """Three-minute input payload: session summary plus entries "0".."2".

    Each minute entry holds ``ecg_data`` / ``pupil_data`` report documents (or
    None on modality dropout) and that minute's ``min_summary``.
    """
    if len(minutes) != 3:
        raise ValueError(f"a tri-minute bundle needs exactly 3 minute entries, got {len(minutes)}")
    data: dict = {"session_summary": session_summary}
    for i, entry in enumerate(minutes):
        data[str(i)] = {
            "ecg_data": entry.get("ecg_data"),
            "pupil_data": entry.get("pupil_data"),
            "min_summary": entry.get("min_summary", ""),
        }
    return {"data": data}


class ReasoningClient(Protocol):
    def decide_hf(self, bundle: dict, preferences: dict, recent_prompts: list[str]) -> LoopDecision: ...
    def decide_lf(self, bundle: dict, preferences: dict, recent_prompts: list[str]) -> LoopDecision: ...
    def chat(self, text: str, history: list[dict], preferences: dict) -> str: ...


def _snapshot_entries(bundle: dict) -> list[dict]:
    return [bundle["data"][str(i)] for i in range(4)]


def _consecutive(flags: list[bool], need: int) -> bool:
    run = 0
    for f in flags:
        run = run + 1 if f else 0
        if run >= need:
            return True
    return False


def _detected_task(entries: list[dict]) -> str:
    tasks = [e["screenshot_analysis"]["task"] for e in entries
             if e.get("screenshot_analysis") and e["screenshot_analysis"].get("task")]
    tasks = [t for t in tasks if t != UNKNOWN]
    if not tasks:
        return UNKNOWN
    counts: dict[str, int] = {}
    for t in tasks:
        counts[t] = counts.get(t, 0) + 1
    best = max(counts.values())
    # ties resolve to the most recent task
    for t in reversed(tasks):
        if counts[t] == best:
            return t
    return tasks[-1]


def _prev_action(prev_summary: str) -> str:
    m = re.search(r"(?:^|;\s*)action=([a-z\- ]+?)(?:;|$)", prev_summary)
    return m.group(1).strip() if m else "none"


class RuleBasedMockReasoner:
    """Deterministic stand-in for the reasoning model.

    Trigger table (all require multi-interval persistence; a single anomalous
    snapshot never fires):
      posture        >=3 consecutive snapshots with overall score < 50
      distraction    >=3 consecutive snapshots distracted AND task-mismatched
      stress (3-min) level "high" with confidence > 70 in all 3 minutes
      load (3-min)   score > 90 with fatigue warnings in all 3 minutes
      suggestion     no intervention, none in the previous 2 one-minute cycles,
                     detected task canonical
    One decision carries at most one intervention OR one suggestion.
    """

    def __init__(self):
        self._hf_cycle = 0
        self._last_suggestion_cycle: int | None = None

    def reset(self) -> None:
        self._hf_cycle = 0
        self._last_suggestion_cycle = None

    # -- one-minute loop ---------------------------------------------------
    def decide_hf(self, bundle: dict, preferences: dict, recent_prompts: list[str]) -> LoopDecision:
        self._hf_cycle += 1
        entries = _snapshot_entries(bundle)
        prev = _prev_action(bundle["data"].get("prev_min_summary", ""))

        poor = [e.get("posture_data") is not None and e["posture_data"]["overall_score"] < 50
                for e in entries]
        expected_task = preferences.get("task")
        distracted = []
        for e in entries:
            wv, sc = e.get("world_view_analysis"), e.get("screenshot_analysis")
            is_distracted = (wv is not None
                             and engagement_flag(WorldContext(**wv)) == "distracted")
            mismatch = (sc is not None and sc["task"] != UNKNOWN
                        and (sc["task"] != expected_task if expected_task
                             else sc["task"] not in CANONICAL_TASKS))
            distracted.append(is_distracted and mismatch)

        task = _detected_task(entries)
        scores = [e["posture_data"]["overall_score"] for e in entries if e.get("posture_data")]
        base = (f"task={task}; distracted={sum(distracted)}/4; "
                f"posture_min={min(scores) if scores else 'n/a'}; prev_action={prev}")

        if _consecutive(poor, 3):
            return LoopDecision(True, "posture", POSTURE_MESSAGE, False, "none", "",
                                f"sustained poor posture this minute; {base}; action=posture")
        if _consecutive(distracted, 3):
            return LoopDecision(True, "distraction", DISTRACTION_MESSAGE, False, "none", "",
                                f"sustained off-task activity this minute; {base}; action=distraction")

        can_suggest = (self._last_suggestion_cycle is None
                       or self._hf_cycle - self._last_suggestion_cycle > 2)
        if can_suggest and task in CANONICAL_TASKS:
            self._last_suggestion_cycle = self._hf_cycle
            descriptions = " ".join(
                e["screenshot_analysis"]["description"].lower()
                for e in entries if e.get("screenshot_analysis"))
            struggling = descriptions.count("error") >= 2
            message = STUCK_MESSAGE if struggling else TASK_TIPS[task]
            return LoopDecision(False, "none", "", True, task, message,
                                f"focused on {task}; {base}; action=suggestion")
        return LoopDecision.none(f"steady minute; {base}; action=none")

    # -- three-minute loop ---------------------------------------------------
    def decide_lf(self, bundle: dict, preferences: dict, recent_prompts: list[str]) -> LoopDecision:
        minutes = [bundle["data"][str(i)] for i in range(3)]
        prev = _prev_action(bundle["data"].get("session_summary", ""))

        stress_levels, stress_confs, load_scores, fatigue = [], [], [], []
        for m in minutes:
            ecg = m.get("ecg_data")
            stress_levels.append(ecg["stress_analysis"]["level"] if ecg else None)
            stress_confs.append(ecg["stress_analysis"]["confidence"] if ecg else 0)
            pupil = m.get("pupil_data")
            load_scores.append(pupil["pupil"]["summary"]["score"] if pupil else None)
            fatigue.append(bool(pupil and pupil["gaze_behavior"].get("fatigue_warning")))

        base = (f"stress={[s or 'n/a' for s in stress_levels]}; "
                f"load={[s if s is not None else 'n/a' for s in load_scores]}; prev_action={prev}")

        if all(lv == "high" and c > 70 for lv, c in zip(stress_levels, stress_confs)):
            return LoopDecision(True, "stress", STRESS_MESSAGE, False, "none", "",
                                f"high stress sustained across 3 minutes; {base}; action=stress")
        if all(s is not None and s > 90 for s in load_scores) and all(fatigue):
            return LoopDecision(True, "cognitive load", LOAD_MESSAGE, False, "none", "",
                                f"high cognitive load with fatigue across 3 minutes; {base}; "
                                "action=cognitive load")
        return LoopDecision.none(f"stable physiological state; {base}; action=none")

    def chat(self, text: str, history: list[dict], preferences: dict) -> str:
        tone = preferences.get("tone", "neutral")
        return f"[{tone}] Noted: {text}"


class SilentFailureClient:
    """Reasoning client whose every call fails; used to exercise fallbacks."""

    def decide_hf(self, bundle, preferences, recent_prompts) -> LoopDecision:
        raise ConnectionError("reasoning backend unreachable")

    decide_lf = decide_hf

    def chat(self, text, history, preferences) -> str:
        raise ConnectionError("reasoning backend unreachable")


@dataclass(frozen=True)
class Tick:
    t: float
    kind: str   # report | snapshot | hf | lf
    priority: int


def generate_ticks(duration: float,
                   activation_s: float = ACTIVATION_S) -> list[Tick]:
    """All engine ticks up to ``duration``, ordered by (t, priority).

    1 Hz report ticks run for the whole session; snapshot / one-minute /
    three-minute ticks start after the activation gate. Three-minute ticks
    always coincide with every third one-minute tick.
    """
    ticks: list[Tick] = []
    t = REPORT_EVERY_S
    while t <= duration + 1e-9:
        ticks.append(Tick(round(t, 9), "report", 0))
        t += REPORT_EVERY_S
    for every, kind, prio in ((SNAPSHOT_EVERY_S, "snapshot", 1),
                              (HF_EVERY_S, "hf", 2),
                              (LF_EVERY_S, "lf", 3)):
        t = activation_s + every
        while t <= duration + 1e-9:
            ticks.append(Tick(round(t, 9), kind, prio))
            t += every
    ticks.sort(key=lambda k: (k.t, k.priority))
    return ticks


def bundle_to_json(bundle: dict) -> str:
    return json.dumps(bundle, separators=(",", ":"), sort_keys=False)
