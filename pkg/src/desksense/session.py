"""Session engine: wires replayed streams through analyzers, loops and policy.

One logical timeline: the replay advances the shared clock, and every due tick
(1 Hz state row, 15 s snapshot, 1-minute loop, 3-minute loop) fires in
(time, priority) order before the sample that passed it is ingested. With the
deterministic mock clients the whole engine is a pure function of the
recording.
"""

from __future__ import annotations

import logging
import queue
import threading
from dataclasses import dataclass, field

from . import loops
from .context import (ScreenContext, VisionClient, VisualFrame, WorldContext,
                      analyze_screenshot, analyze_worldview)
from .gaze import GazeAnalyzer
from .hrv import HrvAnalyzer
from .loops import (FAILURE_SUMMARY, INITIAL_SUMMARY, IntervalSnapshot,
                    LoopDecision, ReasoningClient, build_minute_bundle,
                    build_tri_minute_bundle, generate_ticks)
from .policy import IN_CHAT, DeliveredEvent, InterventionPolicy, route
from .posture import LandmarkFrame, PostureAnalyzer
from .streams import (SampleEnvelope, SessionClock, SessionRecording,
                      StreamKind, replay)

log = logging.getLogger(__name__)

PHASES = ("idle", "calibrating", "active", "ended")


@dataclass
class ChatMessage:
    role: str     # user | assistant | proactive_suggestion
    text: str
    t: float

    def to_doc(self) -> dict:
        return {"role": self.role, "text": self.text, "t": self.t}


@dataclass
class StateRow:
    """One 1 Hz timeline row for dashboards, CSV reports and figures."""

    t: float
    phase: str
    posture_overall: int | None = None
    posture_category: str | None = None
    hr_bpm: float | None = None
    sdnn_ms: float | None = None
    rmssd_ms: float | None = None
    stress_level: str | None = None
    stress_confidence: int | None = None
    load_score: int | None = None
    load_level: str | None = None
    fatigue: bool | None = None

    def to_doc(self) -> dict:
        return self.__dict__.copy()


class SessionEngine:
    """Drives one session from a recording (or live feed) to decisions/events."""

    def __init__(self,
                 vision_client: VisionClient,
                 reasoner: ReasoningClient,
                 preferences: dict | None = None,
                 policy: InterventionPolicy | None = None):
        self.vision_client = vision_client
        self.reasoner = reasoner
        self.policy = policy or InterventionPolicy(preferences)
        if preferences and policy:
            self.policy.set_preferences(preferences)
        self.clock = SessionClock("virtual")
        self._lock = threading.Lock()
        self._subscribers: list[queue.SimpleQueue] = []
        self._reset_session_state()

    # -- lifecycle -----------------------------------------------------------
    def _reset_session_state(self) -> None:
        self.phase = "idle"
        self.posture = PostureAnalyzer()
        self.hrv = HrvAnalyzer()
        self.gaze = GazeAnalyzer()
        if hasattr(self.reasoner, "reset"):
            self.reasoner.reset()
        self._screen_frames: dict[str, VisualFrame] = {}   # kind -> latest frame
        self._context_cache: dict[tuple, object] = {}
        self._ticks: list[loops.Tick] = []
        self._tick_idx = 0
        self._next_tick_t = float("inf")
        self._pending_snapshots: list[IntervalSnapshot] = []
        self._minute_entries: list[dict] = []
        self.snapshot_count = 0
        self._prev_min_summary = INITIAL_SUMMARY
        self._session_summary = INITIAL_SUMMARY
        self._pending_hf: tuple[float, LoopDecision] | None = None
        self.decisions: list[dict] = []       # {"t", "loop", "decision", "bundle"}
        self.events: list[DeliveredEvent] = []
        self.chat_log: list[ChatMessage] = []
        self.timeline: list[StateRow] = []
        self.latest_state: dict = {"phase": "idle", "t": 0.0, "posture": None,
                                   "hrv": None, "gaze": None}

    @property
    def preferences(self) -> dict:
        return self.policy.preferences

    def set_preferences(self, prefs: dict) -> None:
        with self._lock:
            self.policy.set_preferences(prefs)

    def subscribe(self) -> queue.SimpleQueue:
        """Event feed from this moment on; no replay of missed events."""
        q: queue.SimpleQueue = queue.SimpleQueue()
        with self._lock:
            self._subscribers.append(q)
        return q

    def unsubscribe(self, q: queue.SimpleQueue) -> None:
        with self._lock:
            if q in self._subscribers:
                self._subscribers.remove(q)

    # -- stream consumers ------------------------------------------------------
    def consumers(self, recording: SessionRecording) -> dict:
        sinks = {}
        for sid, desc in recording.descriptors.items():
            handler = {
                StreamKind.ECG: self._on_ecg,
                StreamKind.GAZE: self._on_gaze,
                StreamKind.LANDMARKS: self._on_landmarks,
                StreamKind.SCREENSHOT: self._on_visual,
                StreamKind.EGOCENTRIC: self._on_visual,
            }[desc.kind]
            sinks[sid] = self._make_sink(desc.kind, handler)
        return sinks

    def _make_sink(self, kind: StreamKind, handler):
        def sink(rec: SampleEnvelope):
            if rec.t > self._next_tick_t:
                self._advance(rec.t)
            handler(kind, rec)
        return sink

    def _on_ecg(self, kind: StreamKind, rec: SampleEnvelope) -> None:
        self.hrv.ingest(rec.t, float(rec.payload))

    def _on_gaze(self, kind: StreamKind, rec: SampleEnvelope) -> None:
        p = rec.payload
        self.gaze.ingest(rec.t, tuple(p["d"]), float(p["pl"]), float(p["pr"]), float(p["conf"]))

    def _on_landmarks(self, kind: StreamKind, rec: SampleEnvelope) -> None:
        self.posture.ingest(LandmarkFrame(t=rec.t, landmarks=rec.payload["pts"]))

    def _on_visual(self, kind: StreamKind, rec: SampleEnvelope) -> None:
        self._screen_frames[kind.value] = VisualFrame(kind, rec.t, rec.payload)

    # -- tick machinery --------------------------------------------------------
    def _advance(self, t: float) -> None:
        """Fire every tick strictly earlier than the incoming sample time."""
        while self._tick_idx < len(self._ticks) and self._ticks[self._tick_idx].t < t:
            self._fire(self._ticks[self._tick_idx])
            self._tick_idx += 1
        self._next_tick_t = (self._ticks[self._tick_idx].t
                             if self._tick_idx < len(self._ticks) else float("inf"))

    def _flush_ticks(self, up_to: float) -> None:
        while self._tick_idx < len(self._ticks) and self._ticks[self._tick_idx].t <= up_to:
            self._fire(self._ticks[self._tick_idx])
            self._tick_idx += 1
        self._next_tick_t = (self._ticks[self._tick_idx].t
                             if self._tick_idx < len(self._ticks) else float("inf"))

    def _fire(self, tick: loops.Tick) -> None:
        if tick.kind == "report":
            self._tick_report(tick.t)
        elif tick.kind == "snapshot":
            self._tick_snapshot(tick.t)
        elif tick.kind == "hf":
            self._tick_hf(tick.t)
        elif tick.kind == "lf":
            self._tick_lf(tick.t)

    def _tick_report(self, t: float) -> None:
        if self.phase in ("calibrating", "active") and t >= loops.ACTIVATION_S:
            self.phase = "active"
        posture_rep = self.posture.latest_report()
        hrv_rep = self.hrv.report_at(t)
        gaze_rep = self.gaze.report_at(t)
        row = StateRow(t=t, phase=self.phase)
        if posture_rep:
            row.posture_overall = posture_rep.overall_score
            row.posture_category = posture_rep.current_posture_category
        if hrv_rep:
            row.hr_bpm = round(hrv_rep.metrics.hr_bpm, 2)
            row.sdnn_ms = round(hrv_rep.metrics.sdnn_ms, 2)
            row.rmssd_ms = round(hrv_rep.metrics.rmssd_ms, 2)
            row.stress_level = hrv_rep.stress.level
            row.stress_confidence = hrv_rep.stress.confidence
        if gaze_rep:
            row.load_score = gaze_rep.load.score
            row.load_level = gaze_rep.load.level
            row.fatigue = gaze_rep.fatigue
        self.timeline.append(row)
        # snapshot-consistent state: one dict swapped in atomically
        self.latest_state = {
            "phase": self.phase,
            "t": t,
            "posture": posture_rep.to_doc() if posture_rep else None,
            "hrv": hrv_rep.to_doc() if hrv_rep else None,
            "gaze": gaze_rep.to_doc() if gaze_rep else None,
        }

    def _analyze_latest(self, kind: StreamKind):
        frame = self._screen_frames.get(kind.value)
        if frame is None:
            return None
        key = (kind.value, frame.t)
        if key not in self._context_cache:
            if kind is StreamKind.SCREENSHOT:
                self._context_cache[key] = analyze_screenshot(frame, self.vision_client)
            else:
                self._context_cache[key] = analyze_worldview(frame, self.vision_client)
        return self._context_cache[key]

    def capture_snapshot(self, t: float) -> IntervalSnapshot:
        """Latest posture report plus freshly analyzed visual contexts; missing
        modalities stay None."""
        posture_rep = self.posture.latest_report()
        snap = IntervalSnapshot(
            t=t,
            world_view=self._analyze_latest(StreamKind.EGOCENTRIC),
            posture=posture_rep.to_doc()["posture_data"] if posture_rep else None,
            screenshot=self._analyze_latest(StreamKind.SCREENSHOT),
        )
        return snap

    def _tick_snapshot(self, t: float) -> None:
        self.snapshot_count += 1
        self._pending_snapshots.append(self.capture_snapshot(t))

    def _recent_prompts(self) -> list[str]:
        user = [m.text for m in self.chat_log if m.role == "user"]
        return user[-loops.PROMPT_WINDOW:]

    def _safe_decide(self, decide, bundle: dict) -> LoopDecision:
        try:
            decision = decide(bundle, dict(self.preferences), self._recent_prompts())
            decision.to_doc()  # force schema invariants before use
            return decision
        except Exception as exc:
            log.warning("reasoning call failed: %s", exc)
            return LoopDecision.none(FAILURE_SUMMARY)

    def _tick_hf(self, t: float) -> None:
        snaps, self._pending_snapshots = self._pending_snapshots[-4:], []
        if len(snaps) != 4:
            snaps = (snaps + [self.capture_snapshot(t)] * 4)[:4]
        bundle = build_minute_bundle(snaps, self._prev_min_summary)
        decision = self._safe_decide(self.reasoner.decide_hf, bundle)
        self.decisions.append({"t": t, "loop": "hf", "decision": decision.to_doc(),
                               "bundle": bundle})
        self._prev_min_summary = decision.summary
        hrv_rep = self.hrv.report_at(t)
        gaze_rep = self.gaze.report_at(t)
        self._minute_entries.append({
            "ecg_data": hrv_rep.to_doc() if hrv_rep else None,
            "pupil_data": gaze_rep.to_doc() if gaze_rep else None,
            "min_summary": decision.summary,
        })
        if self._lf_due_at(t):
            self._pending_hf = (t, decision)   # the 3-minute loop arbitrates
        else:
            self._deliver(t, decision, loop="hf")

    def _lf_due_at(self, t: float) -> bool:
        rem = (t - loops.ACTIVATION_S) % loops.LF_EVERY_S
        return t > loops.ACTIVATION_S and min(rem, loops.LF_EVERY_S - rem) < 1e-6

    def _tick_lf(self, t: float) -> None:
        minutes, self._minute_entries = self._minute_entries[-3:], []
        while len(minutes) < 3:
            minutes.insert(0, {"ecg_data": None, "pupil_data": None, "min_summary": ""})
        bundle = build_tri_minute_bundle(minutes, self._session_summary)
        decision = self._safe_decide(self.reasoner.decide_lf, bundle)
        self.decisions.append({"t": t, "loop": "lf", "decision": decision.to_doc(),
                               "bundle": bundle})
        self._session_summary = decision.summary
        lf_delivered_intervention = self._deliver(t, decision, loop="lf")
        if self._pending_hf is not None:
            hf_t, hf_decision = self._pending_hf
            self._pending_hf = None
            self._deliver(hf_t, hf_decision, loop="hf",
                          superseded=lf_delivered_intervention)

    def _deliver(self, t: float, decision: LoopDecision, loop: str,
                 superseded: bool = False) -> bool:
        """Route a decision through the policy; returns True when an
        intervention was actually delivered."""
        routed = route(decision)
        if not routed:
            self.policy.note_empty_decision(t, loop)
            return False
        delivered_intervention = False
        for spec, route_name in routed:
            override = "superseded" if superseded and route_name == IN_CHAT else None
            event = self.policy.process(spec, route_name, t, reason_override=override)
            if event is None:
                continue
            self.events.append(event)
            if route_name == IN_CHAT:
                self.chat_log.append(ChatMessage("proactive_suggestion", spec.message, t))
            else:
                delivered_intervention = True
            with self._lock:
                for q in self._subscribers:
                    q.put(event)
        return delivered_intervention

    # -- chat ------------------------------------------------------------------
    def post_chat(self, text: str) -> str:
        t = self.clock.now()
        with self._lock:
            self.chat_log.append(ChatMessage("user", text, t))
        try:
            reply = self.reasoner.chat(text, [m.to_doc() for m in self.chat_log],
                                       dict(self.preferences))
        except Exception as exc:
            reply = f"Assistant is unavailable right now ({type(exc).__name__}); please retry."
        with self._lock:
            self.chat_log.append(ChatMessage("assistant", reply, t))
        return reply

    # -- session control ---------------------------------------------------------
    def start(self) -> None:
        if self.phase not in ("idle", "ended"):
            raise RuntimeError(f"cannot start a session while {self.phase}")
        self._reset_session_state()
        self.policy.reset()
        self.clock = SessionClock("virtual")
        self.phase = "calibrating"

    def run_recording(self, recording: SessionRecording,
                      duration: float | None = None,
                      speed: float | str = "max") -> None:
        """Replay a recording through the engine; blocks until the session ends."""
        self.start()
        self._run_started(recording, duration, speed)

    def _run_started(self, recording: SessionRecording,
                     duration: float | None = None,
                     speed: float | str = "max") -> None:
        total = max(duration or 0.0, recording.duration)
        self._ticks = generate_ticks(total)
        self._tick_idx = 0
        self._next_tick_t = self._ticks[0].t if self._ticks else float("inf")
        summary = replay(recording, self.clock, self.consumers(recording),
                         duration=total, speed=speed)
        if not summary.completed:
            self.stop()
            raise RuntimeError(f"replay aborted at record {summary.error_position}: {summary.error}")
        self._flush_ticks(total)
        self.stop()

    def stop(self) -> None:
        """End the session and discard buffered sensor data (data minimization)."""
        if self.phase not in ("calibrating", "active"):
            raise RuntimeError(f"cannot stop a session while {self.phase}")
        self.posture.reset()
        self.hrv.reset()
        self.gaze.reset()
        self._screen_frames.clear()
        self._context_cache.clear()
        self.phase = "ended"
        self.latest_state = dict(self.latest_state, phase="ended")
