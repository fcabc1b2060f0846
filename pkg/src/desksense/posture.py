"""Upper-body landmark frames -> smoothed, categorized posture scores.

Frames carry 33 landmarks (x, y, z, visibility) in normalized image
coordinates with y growing downward and z toward the camera being more
negative, matching common pose-landmarker output.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

# Landmark indices used by the three component scores.
NOSE = 0
LEFT_EAR = 7
RIGHT_EAR = 8
LEFT_SHOULDER = 11
RIGHT_SHOULDER = 12
KEY_LANDMARKS = (NOSE, LEFT_EAR, RIGHT_EAR, LEFT_SHOULDER, RIGHT_SHOULDER)

LANDMARK_COUNT = 33
VISIBILITY_MIN = 0.7            # key landmarks below this reject the frame
SMOOTHING_SAMPLES = 15          # moving average span, accepted frames
WEIGHT_SHOULDER, WEIGHT_NECK, WEIGHT_BACK = 0.25, 0.35, 0.40
BACK_ANGLE_SATURATION_DEG = 45.0
CRITICAL_BELOW = 20.0           # internal flag for the policy layer, not reported

CATEGORY_BANDS = (              # lower bound (inclusive) -> category
    (90.0, "IDEAL"),
    (70.0, "FAIRLY GOOD"),
    (50.0, "AVERAGE"),
    (0.0, "POOR"),
)

FEEDBACK = {
    "IDEAL": "Excellent upright posture",
    "FAIRLY GOOD": "Maintaining good posture",
    "AVERAGE": "Posture is slipping; adjust your seating",
    "POOR": "Poor posture; sit up straight",
}


class MalformedFrame(ValueError):
    """Structurally invalid landmark frame (wrong count, bad visibility)."""


class NoValidFrames(RuntimeError):
    """No accepted frame has been processed yet."""


def round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


@dataclass(frozen=True)
class LandmarkFrame:
    """One pose frame: t plus 33 (x, y, z, visibility) rows."""

    t: float
    landmarks: tuple  # any sequence of 33 4-sequences

    def __post_init__(self):
        if len(self.landmarks) != LANDMARK_COUNT:
            raise MalformedFrame(f"expected {LANDMARK_COUNT} landmarks, got {len(self.landmarks)}")
        for lm in self.landmarks:
            if len(lm) != 4:
                raise MalformedFrame("each landmark needs (x, y, z, visibility)")
            if not 0.0 <= lm[3] <= 1.0:
                raise MalformedFrame(f"visibility {lm[3]} outside [0, 1]")


@dataclass(frozen=True)
class PostureScores:
    shoulder: float
    neck: float
    back: float

    @property
    def overall(self) -> float:
        return WEIGHT_SHOULDER * self.shoulder + WEIGHT_NECK * self.neck + WEIGHT_BACK * self.back


@dataclass(frozen=True)
class PostureReport:
    overall_score: int
    shoulder_score: int
    neck_score: int
    back_score: int
    current_posture_category: str
    feedback: str
    critical: bool  # smoothed overall below 20; consumed by policy only
    t: float

    def to_doc(self) -> dict:
        return {
            "posture_data": {
                "overall_score": self.overall_score,
                "shoulder_score": self.shoulder_score,
                "neck_score": self.neck_score,
                "back_score": self.back_score,
                "current_posture_category": self.current_posture_category,
                "feedback": self.feedback,
            }
        }


def validate_frame(frame: LandmarkFrame) -> bool:
    """Accept iff every key landmark has visibility >= 0.7 (strict '<' rejects)."""
    return all(frame.landmarks[i][3] >= VISIBILITY_MIN for i in KEY_LANDMARKS)


def _clamp01(v: float) -> float:
    return 0.0 if v < 0.0 else (1.0 if v > 1.0 else v)


def score_components(frame: LandmarkFrame) -> PostureScores:
    """Three ergonomic component scores, each normalized to [0, 100].

    shoulder: vertical misalignment of the shoulders relative to their span.
    neck: forward offset of the nose beyond the shoulder midline, against the
    ear-to-ear span as head-depth scale.
    back: deviation of the shoulders->ears segment from vertical, saturating
    at 45 degrees.
    """
    nose = frame.landmarks[NOSE]
    le, re = frame.landmarks[LEFT_EAR], frame.landmarks[RIGHT_EAR]
    ls, rs = frame.landmarks[LEFT_SHOULDER], frame.landmarks[RIGHT_SHOULDER]

    width = math.hypot(ls[0] - rs[0], ls[1] - rs[1])
    if width <= 1e-9:
        shoulder = 0.0
    else:
        shoulder = 100.0 * (1.0 - _clamp01(abs(ls[1] - rs[1]) / width))

    mid_sh = ((ls[0] + rs[0]) / 2.0, (ls[1] + rs[1]) / 2.0, (ls[2] + rs[2]) / 2.0)
    head_depth = math.sqrt((le[0] - re[0]) ** 2 + (le[1] - re[1]) ** 2 + (le[2] - re[2]) ** 2)
    forward = max(0.0, mid_sh[2] - nose[2])  # nose closer to camera than shoulders
    if head_depth <= 1e-9:
        neck = 0.0
    else:
        neck = 100.0 * (1.0 - _clamp01(forward / head_depth))

    mid_ear = ((le[0] + re[0]) / 2.0, (le[1] + re[1]) / 2.0, (le[2] + re[2]) / 2.0)
    dx = mid_ear[0] - mid_sh[0]
    dy = mid_ear[1] - mid_sh[1]  # negative when ears are above shoulders
    dz = mid_ear[2] - mid_sh[2]
    lateral = math.hypot(dx, dz)
    angle = math.degrees(math.atan2(lateral, -dy)) if (lateral, dy) != (0.0, 0.0) else 0.0
    angle = min(max(angle, 0.0), BACK_ANGLE_SATURATION_DEG)
    back = 100.0 * (1.0 - angle / BACK_ANGLE_SATURATION_DEG)

    return PostureScores(shoulder=shoulder, neck=neck, back=back)


def smooth(history) -> float:
    """Arithmetic mean of up to the 15 most recent overall scores."""
    recent = list(history)[-SMOOTHING_SAMPLES:]
    if not recent:
        raise NoValidFrames("no scores to smooth")
    return sum(recent) / len(recent)


def categorize(score: float) -> tuple[str, str]:
    if not 0.0 <= score <= 100.0:
        raise ValueError(f"score {score} outside [0, 100]")
    for lower, category in CATEGORY_BANDS:
        if score >= lower:
            return category, FEEDBACK[category]
    return "POOR", FEEDBACK["POOR"]  # unreachable; bands cover [0, 100]


class PostureAnalyzer:
    """Per-frame scoring plus a small ring of recent accepted-frame scores.

    Components are smoothed individually; the weighted overall of the smoothed
    components equals the smoothed overall (the weighting is linear), so the
    reported fields stay mutually consistent.
    """

    def __init__(self):
        self._ring: deque[PostureScores] = deque(maxlen=SMOOTHING_SAMPLES)
        self._accepted = 0
        self._rejected = 0
        self._last_t: float | None = None

    @property
    def accepted_frames(self) -> int:
        return self._accepted

    def ingest(self, frame: LandmarkFrame) -> bool:
        """Score a frame if it passes visibility gating; returns acceptance."""
        if not validate_frame(frame):
            self._rejected += 1
            return False
        self._ring.append(score_components(frame))
        self._accepted += 1
        self._last_t = frame.t
        return True

    def latest_report(self) -> PostureReport | None:
        if not self._ring:
            return None
        return self.emit_report()

    def emit_report(self) -> PostureReport:
        if not self._ring:
            raise NoValidFrames("no accepted landmark frames yet")
        n = len(self._ring)
        sh = sum(s.shoulder for s in self._ring) / n
        nk = sum(s.neck for s in self._ring) / n
        bk = sum(s.back for s in self._ring) / n
        overall = WEIGHT_SHOULDER * sh + WEIGHT_NECK * nk + WEIGHT_BACK * bk
        category, feedback = categorize(overall)
        return PostureReport(
            overall_score=round_half_up(overall),
            shoulder_score=round_half_up(sh),
            neck_score=round_half_up(nk),
            back_score=round_half_up(bk),
            current_posture_category=category,
            feedback=feedback,
            critical=overall < CRITICAL_BELOW,
            t=self._last_t if self._last_t is not None else 0.0,
        )

    def reset(self) -> None:
        self._ring.clear()
        self._accepted = 0
        self._rejected = 0
        self._last_t = None
