"""Routing, debouncing and preference filtering of loop decisions.

Task-focused suggestions go in-chat; user-focused interventions go out as
system notifications. Every suppression lands in the audit log with a reason.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .loops import LoopDecision

IN_CHAT = "in_chat"
SYSTEM_NOTIFICATION = "system_notification"

URGENCY_HIGH_TYPES = frozenset({"stress", "posture", "distraction", "cognitive load"})

# Per-type cooldown seconds; all suggestions share one bucket. Well-being
# alerts recur faster than morale messages. Surfaced as configuration, not a
# claimed constant of the approach.
DEFAULT_COOLDOWNS_S = {
    "posture": 120.0,
    "distraction": 180.0,
    "stress": 300.0,
    "cognitive load": 300.0,
    "encouragement": 600.0,
    "break suggestion": 600.0,
    "suggestion": 120.0,
}

PROACTIVITY_COOLDOWN_FACTOR = {"low": 2.0, "normal": 1.0, "high": 0.5}

DEFAULT_PREFERENCES = {
    "tone": "supportive",
    "proactivity": "normal",
    "notification_style": "standard",
    "dnd": False,
    "task": None,
}


@dataclass(frozen=True)
class InterventionSpec:
    type: str
    urgency: str              # low | high
    message: str
    confidence: float         # 0-1
    tone: str | None = None

    def to_doc(self) -> dict:
        return {"type": self.type, "urgency": self.urgency,
                "message": self.message, "confidence": self.confidence,
                "tone": self.tone}


@dataclass(frozen=True)
class AuditEntry:
    t: float
    type: str
    route: str
    action: str               # delivered | suppressed
    reason: str

    def to_line(self) -> str:
        return f"{self.t:.1f}\t{self.type}\t{self.route}\t{self.action}\t{self.reason}"


@dataclass(frozen=True)
class DeliveredEvent:
    t: float
    spec: InterventionSpec
    route: str

    def to_doc(self) -> dict:
        return {"t": self.t, "route": self.route, **self.spec.to_doc()}


def route(decision: LoopDecision) -> list[tuple[InterventionSpec, str]]:
    """Pure mapping from a decision to routed specs (possibly empty).

    Interventions become system notifications (urgency high for the four
    well-being types, low for encouragement/break); suggestions become
    low-urgency in-chat messages.
    """
    routed: list[tuple[InterventionSpec, str]] = []
    if decision.intervention:
        urgency = "high" if decision.intervention_type in URGENCY_HIGH_TYPES else "low"
        routed.append((InterventionSpec(decision.intervention_type, urgency,
                                        decision.i_message, decision.confidence),
                       SYSTEM_NOTIFICATION))
    if decision.suggestion:
        routed.append((InterventionSpec(decision.suggestion_type, "low",
                                        decision.s_message, decision.confidence),
                       IN_CHAT))
    return routed


def _cooldown_key(spec: InterventionSpec, route_name: str) -> str:
    return "suggestion" if route_name == IN_CHAT else spec.type


class InterventionPolicy:
    """Stateful debounce + preference filter with an append-only audit log."""

    def __init__(self, preferences: dict | None = None,
                 cooldowns: dict | None = None):
        self.preferences = dict(DEFAULT_PREFERENCES)
        if preferences:
            self.preferences.update(preferences)
        self.cooldowns = dict(DEFAULT_COOLDOWNS_S)
        if cooldowns:
            self.cooldowns.update(cooldowns)
        self.last_delivery: dict[str, float] = {}
        self.delivery_counts: dict[str, int] = {}
        self.audit: list[AuditEntry] = []

    def set_preferences(self, preferences: dict) -> None:
        self.preferences.update(preferences)

    def effective_cooldown(self, key: str) -> float:
        factor = PROACTIVITY_COOLDOWN_FACTOR.get(self.preferences.get("proactivity", "normal"), 1.0)
        return self.cooldowns.get(key, 120.0) * factor

    def apply_preferences(self, spec: InterventionSpec, route_name: str,
                          now: float) -> InterventionSpec | None:
        """Tone tagging plus do-not-disturb; DND mutes only system notifications."""
        if self.preferences.get("dnd") and route_name == SYSTEM_NOTIFICATION:
            self.audit.append(AuditEntry(now, spec.type, route_name, "suppressed", "dnd"))
            return None
        return replace(spec, tone=self.preferences.get("tone"))

    def debounce(self, spec: InterventionSpec, route_name: str, now: float) -> bool:
        """True to deliver; False (with audit entry) when inside the cooldown."""
        key = _cooldown_key(spec, route_name)
        last = self.last_delivery.get(key)
        if last is not None and now - last < self.effective_cooldown(key):
            self.audit.append(AuditEntry(now, spec.type, route_name, "suppressed", "cooldown"))
            return False
        self.last_delivery[key] = now
        self.delivery_counts[key] = self.delivery_counts.get(key, 0) + 1
        return True

    def process(self, spec: InterventionSpec, route_name: str,
                now: float, reason_override: str | None = None) -> DeliveredEvent | None:
        """Full path for one routed spec: preferences, then debounce, then audit."""
        if reason_override is not None:
            self.audit.append(AuditEntry(now, spec.type, route_name, "suppressed", reason_override))
            return None
        spec = self.apply_preferences(spec, route_name, now)
        if spec is None:
            return None
        if not self.debounce(spec, route_name, now):
            return None
        self.audit.append(AuditEntry(now, spec.type, route_name, "delivered", "ok"))
        return DeliveredEvent(now, spec, route_name)

    def note_empty_decision(self, now: float, loop: str) -> None:
        self.audit.append(AuditEntry(now, "none", loop, "suppressed", "empty-decision"))

    def reset(self) -> None:
        self.last_delivery.clear()
        self.delivery_counts.clear()
        self.audit.clear()
