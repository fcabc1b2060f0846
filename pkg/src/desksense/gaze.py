"""Gaze stream -> fixations, saccades, filtered pupil features, cognitive load.

Fixations use a dispersion rule (max pairwise angular distance < 3 degrees for
at least 300 ms); saccades use an inter-sample angular velocity threshold of
30 deg/s. Pupil series are confidence-gated, IQR-cleaned and Savitzky-Golay
smoothed before feature extraction.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass

import numpy as np
from scipy.signal import savgol_filter

from .posture import round_half_up
from .streams import GrowBuffer

GAZE_RATE_HZ = 120.0
DISPERSION_DEG = 3.0
FIXATION_MIN_S = 0.300
SACCADE_VELOCITY_DEG_S = 30.0

SG_WINDOW = 31                  # ~258 ms at 120 Hz
SG_ORDER = 3
CONFIDENCE_MIN = 0.6            # blink gating
IQR_FACTOR = 1.5

STABILIZE_S = 60.0
BASELINE_SPAN = (60.0, 120.0)
WINDOW_S = 60.0

# Ensemble weights and the baseline-relative scale each indicator saturates at.
WEIGHTS = {"pupil": 0.40, "fixation": 0.20, "saccade": 0.25, "asymmetry": 0.15}
PUPIL_CHANGE_SAT_PCT = 10.0     # +10 % dilation over baseline -> 100
ASYMMETRY_SAT_PCT = 10.0        # +10 points of asymmetry over baseline -> 100
FIXATION_SHORTENING_SAT = 0.5   # fixations at half the baseline duration -> 100
SACCADE_RATE_SAT = 1.0          # saccade rate at 2x baseline -> 100
AGREEMENT_SIGMA_SCALE = 60.0    # indicator-score std that zeroes confidence
LOAD_BANDS_PCT = (40.0, 70.0)   # low < 40 <= medium <= 70 < high

FATIGUE_LOSS_FACTOR = 2.0       # blink-gated sample loss vs baseline
FATIGUE_FIXATION_FACTOR = 1.5   # mean fixation duration vs baseline
LOSS_RATE_FLOOR = 0.01          # avoids a zero-loss baseline tripping the 2x rule

SUMMARY_INTERPRETATION = {
    "low": "Low cognitive demand; processing is comfortable with capacity to spare.",
    "medium": "Moderate cognitive engagement balancing focused attention with comfortable processing.",
    "high": "High cognitive demand; sustained effort is approaching capacity limits.",
}
PRACTICAL_INSIGHT = {
    "low": "User is under light load and could take on more demanding work.",
    "medium": "User shows balanced engagement without reaching mental capacity limits.",
    "high": "User is working near capacity; simplifying the task or pausing may help.",
}


@dataclass(frozen=True)
class Fixation:
    start: float
    duration: float
    centroid: tuple  # unit direction

    @property
    def end(self) -> float:
        return self.start + self.duration


@dataclass(frozen=True)
class Saccade:
    start: float
    duration: float
    peak_velocity_deg_s: float


@dataclass(frozen=True)
class PupilFeatures:
    smoothed_mm: float
    velocity_mm_s: float
    asymmetry_pct: float | None      # None when only one eye is usable
    change_pct: float | None         # vs baseline; None before calibration
    valid_fraction: float            # samples surviving confidence gating


@dataclass(frozen=True)
class CognitiveLoadEstimate:
    level: str
    score: int          # 0-100
    confidence: float   # 0-1
    interpretation: str


@dataclass(frozen=True)
class GazeBaseline:
    pupil_mm: float
    asymmetry_pct: float
    fixation_s: float
    saccade_per_min: float
    loss_rate: float


def _angle_deg(u, v) -> float:
    d = u[0] * v[0] + u[1] * v[1] + u[2] * v[2]
    return math.degrees(math.acos(max(-1.0, min(1.0, d))))


class DispersionSegmenter:
    """Online maximal-window fixation detector.

    Invariant: the open candidate window always has exact max pairwise angular
    dispersion < 3 degrees, so a new point only needs comparing against the
    window. A 3D bounding-box certificate skips that scan for the common
    jittering-in-place case (chord <= angle <= 1.001 * chord at these scales).
    """

    def __init__(self, threshold_deg: float = DISPERSION_DEG, min_duration_s: float = FIXATION_MIN_S):
        self.threshold = threshold_deg
        self._chord = 2.0 * math.sin(math.radians(threshold_deg) / 2.0)
        self.min_duration = min_duration_s
        self._t: list[float] = []
        self._v: list[tuple] = []
        self._sum = [0.0, 0.0, 0.0]
        self._lo = [math.inf] * 3
        self._hi = [-math.inf] * 3
        self.completed: list[Fixation] = []

    def _bbox_diag_with(self, v) -> float:
        s = 0.0
        for a in range(3):
            lo = v[a] if v[a] < self._lo[a] else self._lo[a]
            hi = v[a] if v[a] > self._hi[a] else self._hi[a]
            s += (hi - lo) ** 2
        return math.sqrt(s)

    def _fits(self, v) -> bool:
        if not self._v:
            return True
        if self._bbox_diag_with(v) * 1.001 < self._chord:
            return True
        arr = np.asarray(self._v)
        cos = arr @ np.asarray(v)
        worst = math.degrees(math.acos(max(-1.0, min(1.0, float(cos.min())))))
        return worst < self.threshold

    def _centroid(self) -> tuple:
        n = len(self._v)
        c = (self._sum[0] / n, self._sum[1] / n, self._sum[2] / n)
        norm = math.sqrt(c[0] ** 2 + c[1] ** 2 + c[2] ** 2)
        return tuple(x / norm for x in c) if norm > 0 else c

    def _open(self, t: float, v) -> None:
        self._t = [t]
        self._v = [v]
        self._sum = list(v)
        self._lo = list(v)
        self._hi = list(v)

    def _close(self) -> None:
        if self._t and self._t[-1] - self._t[0] >= self.min_duration:
            self.completed.append(Fixation(self._t[0], self._t[-1] - self._t[0], self._centroid()))
        self._t = []
        self._v = []
        self._sum = [0.0, 0.0, 0.0]
        self._lo = [math.inf] * 3
        self._hi = [-math.inf] * 3

    def feed(self, t: float, v: tuple) -> None:
        if self._fits(v):
            self._t.append(t)
            self._v.append(v)
            for a in range(3):
                self._sum[a] += v[a]
                if v[a] < self._lo[a]:
                    self._lo[a] = v[a]
                if v[a] > self._hi[a]:
                    self._hi[a] = v[a]
        else:
            self._close()
            self._open(t, v)

    def open_candidate(self) -> Fixation | None:
        """The still-growing window, if it already qualifies as a fixation."""
        if self._t and self._t[-1] - self._t[0] >= self.min_duration:
            return Fixation(self._t[0], self._t[-1] - self._t[0], self._centroid())
        return None

    def flush(self) -> None:
        self._close()


def detect_fixations(times, directions) -> list[Fixation]:
    """Maximal non-overlapping sub-sequences with dispersion < 3 deg for >= 300 ms."""
    seg = DispersionSegmenter()
    for t, v in zip(times, directions):
        seg.feed(float(t), tuple(v))
    seg.flush()
    return seg.completed


def angular_velocities(times, directions) -> np.ndarray:
    """Inter-sample angular velocity (deg/s) for each consecutive pair."""
    t = np.asarray(times, dtype=float)
    v = np.asarray(directions, dtype=float)
    if len(t) < 2:
        return np.empty(0)
    dots = np.clip(np.sum(v[:-1] * v[1:], axis=1), -1.0, 1.0)
    ang = np.degrees(np.arccos(dots))
    dt = np.diff(t)
    dt[dt <= 0] = np.inf
    return ang / dt


def detect_saccades(times, directions, exclude_spans=()) -> list[Saccade]:
    """Merged runs of above-threshold velocity transitions.

    ``exclude_spans`` masks transitions whose both endpoints fall inside a
    fixation, keeping fixation/saccade partitions disjoint.
    """
    t = np.asarray(times, dtype=float)
    if len(t) < 2:
        return []
    vel = angular_velocities(t, directions)
    above = vel > SACCADE_VELOCITY_DEG_S
    for (s, e) in exclude_spans:
        # transitions with both endpoints inside the span belong to a fixation
        lo = int(np.searchsorted(t, s, side="left"))
        hi = int(np.searchsorted(t, e, side="right"))
        if hi - lo >= 2:
            above[lo:hi - 1] = False
    edges = np.diff(above.astype(np.int8))
    starts = np.flatnonzero(edges == 1) + 1
    ends = np.flatnonzero(edges == -1) + 1
    if above.size and above[0]:
        starts = np.concatenate([[0], starts])
    if above.size and above[-1]:
        ends = np.concatenate([ends, [above.size]])
    saccades: list[Saccade] = []
    for i, j in zip(starts, ends):   # transitions [i, j) form one merged run
        saccades.append(Saccade(
            start=float(t[i]),
            duration=float(t[j] - t[i]),
            peak_velocity_deg_s=float(vel[i:j].max()),
        ))
    return saccades


def segment(times, directions) -> tuple[list[Fixation], list[Saccade]]:
    """Joint segmentation with disjoint fixation/saccade sample membership."""
    fixations = detect_fixations(times, directions)
    spans = [(f.start, f.end) for f in fixations]
    return fixations, detect_saccades(times, directions, exclude_spans=spans)


def _iqr_clean(values: np.ndarray) -> np.ndarray:
    """Replace IQR outliers by linear interpolation over their neighbors."""
    v = values.astype(float).copy()
    q1, q3 = np.percentile(v, (25, 75))
    iqr = q3 - q1
    lo, hi = q1 - IQR_FACTOR * iqr, q3 + IQR_FACTOR * iqr
    bad = (v < lo) | (v > hi)
    if bad.all():
        return v
    if bad.any():
        idx = np.arange(len(v))
        v[bad] = np.interp(idx[bad], idx[~bad], v[~bad])
    return v


def filter_pupil(times, left_mm, right_mm, confidence,
                 baseline_mm: float | None = None) -> PupilFeatures | None:
    """Confidence-gate, IQR-clean and Savitzky-Golay smooth both pupil series.

    Returns None when fewer than one smoothing window of samples survives
    gating ("unavailable"). Asymmetry = 100*|L-R|/mean(L, R) on window means.
    """
    t = np.asarray(times, dtype=float)
    conf = np.asarray(confidence, dtype=float)
    keep = conf >= CONFIDENCE_MIN
    total = len(t)
    if total == 0 or int(keep.sum()) < SG_WINDOW:
        return None
    t = t[keep]
    smoothed = {}
    for name, series in (("l", left_mm), ("r", right_mm)):
        s = np.asarray(series, dtype=float)[keep]
        s = _iqr_clean(s)
        smoothed[name] = savgol_filter(s, SG_WINDOW, SG_ORDER, mode="nearest")
    mean_l = float(smoothed["l"].mean())
    mean_r = float(smoothed["r"].mean())
    both = (smoothed["l"] + smoothed["r"]) / 2.0
    mean_mm = float(both.mean())
    # slope over the filter interior: edge-padded bins are biased
    h = SG_WINDOW // 2
    core = slice(h, -h) if len(both) > 2 * h + 1 else slice(None)
    span = float(t[core][-1] - t[core][0])
    velocity = float((both[core][-1] - both[core][0]) / span) if span > 0 else 0.0
    asym = 100.0 * abs(mean_l - mean_r) / ((mean_l + mean_r) / 2.0) if mean_l + mean_r > 0 else None
    change = None
    if baseline_mm is not None and baseline_mm > 0:
        change = 100.0 * (mean_mm - baseline_mm) / baseline_mm
    return PupilFeatures(
        smoothed_mm=mean_mm,
        velocity_mm_s=velocity,
        asymmetry_pct=asym,
        change_pct=change,
        valid_fraction=float(keep.sum()) / total,
    )


def _clamp01(v: float) -> float:
    return 0.0 if v < 0.0 else (1.0 if v > 1.0 else v)


def score_cognitive_load(pupil_change_pct: float | None,
                         asymmetry_pct: float | None,
                         mean_fixation_s: float | None,
                         saccade_per_min: float | None,
                         baseline: GazeBaseline) -> CognitiveLoadEstimate:
    """Weighted ensemble over baseline-normalized indicators.

    Indicators scale to [0, 100]: pupil dilation saturates at +10 % over
    baseline, asymmetry at +10 points, fixation shortening at half the
    baseline duration, saccade rate at twice the baseline rate. Missing
    indicators renormalize the weights and scale confidence down by the
    missing weight. Confidence otherwise reflects indicator agreement
    (1 - sigma/60).
    """
    indicators: dict[str, float] = {}
    if pupil_change_pct is not None:
        indicators["pupil"] = 100.0 * _clamp01(pupil_change_pct / PUPIL_CHANGE_SAT_PCT)
    if asymmetry_pct is not None:
        excess = asymmetry_pct - baseline.asymmetry_pct
        indicators["asymmetry"] = 100.0 * _clamp01(excess / ASYMMETRY_SAT_PCT)
    if mean_fixation_s is not None and baseline.fixation_s > 0:
        shortening = (baseline.fixation_s - mean_fixation_s) / baseline.fixation_s
        indicators["fixation"] = 100.0 * _clamp01(shortening / FIXATION_SHORTENING_SAT)
    if saccade_per_min is not None and baseline.saccade_per_min > 0:
        rel = saccade_per_min / baseline.saccade_per_min - 1.0
        indicators["saccade"] = 100.0 * _clamp01(rel / SACCADE_RATE_SAT)

    if not indicators:
        return CognitiveLoadEstimate("low", 0, 0.0, SUMMARY_INTERPRETATION["low"])

    total_w = sum(WEIGHTS[k] for k in indicators)
    score = sum(WEIGHTS[k] * v for k, v in indicators.items()) / total_w
    values = np.array(list(indicators.values()))
    agreement = max(0.0, 1.0 - float(values.std()) / AGREEMENT_SIGMA_SCALE)
    confidence = round(agreement * total_w, 2)
    level = "low" if score < 40.0 else ("medium" if score <= 70.0 else "high")
    return CognitiveLoadEstimate(level, round_half_up(score), confidence,
                                 SUMMARY_INTERPRETATION[level])


@dataclass(frozen=True)
class GazeReport:
    load: CognitiveLoadEstimate
    pupil: PupilFeatures | None
    mean_fixation_s: float | None
    saccade_per_min: float | None
    fatigue: bool
    t: float

    def to_doc(self) -> dict:
        chg = self.pupil.change_pct if self.pupil else None
        asym = self.pupil.asymmetry_pct if self.pupil else None
        if chg is None:
            pupillary = "Pupil diameter unavailable for this window."
        else:
            trend = "above" if chg >= 0 else "below"
            mag = abs(chg)
            word = "slight" if mag < 3 else ("moderate" if mag <= 10 else "marked")
            verb = "dilation" if chg >= 0 else "constriction"
            pupillary = (f"Pupils show {word} {verb} ({mag:.1f}% {trend} baseline), "
                         f"suggesting {'active engagement' if chg >= 0 else 'reduced engagement'}.")
        if asym is None:
            asymmetry = "Insufficient binocular data to assess pupil asymmetry."
        else:
            word = "Minimal" if asym < 3 else ("Slight" if asym <= 10 else "Pronounced")
            asymmetry = (f"{word} asymmetry between pupils ({asym:.1f}%) suggests "
                         "differential cognitive processing.")
        if self.mean_fixation_s is None:
            fixation = "No fixations completed in this window."
        else:
            d = self.mean_fixation_s
            word = "Short" if d < 0.2 else ("Moderate" if d <= 0.5 else "Long")
            gloss = ("rapid scanning" if d < 0.2
                     else "balanced information processing" if d <= 0.5 else "deep focal processing")
            fixation = f"{word} fixation durations ({d:.2f}s) indicate {gloss}."
        if self.saccade_per_min is None:
            saccade = "No saccades detected in this window."
        else:
            r = self.saccade_per_min
            word = "Low" if r < 30 else ("Moderate" if r <= 70 else "High")
            gloss = ("settled viewing" if r < 30
                     else "steady visual sampling" if r <= 70 else "active visual search")
            saccade = f"{word} saccade rate ({r:.1f} per minute) suggests {gloss}."
        return {
            "pupil": {
                "summary": {
                    "level": self.load.level,
                    "score": self.load.score,
                    "confidence": self.load.confidence,
                    "interpretation": self.load.interpretation,
                },
                "pupillary_response": {"interpretation": pupillary},
                "asymmetry_insight": asymmetry,
            },
            "gaze_behavior": {
                "fixation_insight": fixation,
                "saccade_insight": saccade,
                "fatigue_warning": self.fatigue,
            },
            "practical_insight": PRACTICAL_INSIGHT[self.load.level],
        }


class GazeAnalyzer:
    """Single consumer of the gaze stream; 1 Hz report snapshots after calibration."""

    # column layout of the sample buffer
    _T, _DX, _DY, _DZ, _PL, _PR, _CONF = range(7)

    def __init__(self, rate_hz: float = GAZE_RATE_HZ):
        self.rate_hz = rate_hz
        self._times: list[float] = []          # mirrors the buffer for bisect
        self._rows = GrowBuffer(width=7)
        self._seg = DispersionSegmenter()
        self.baseline: GazeBaseline | None = None
        self.baseline_failed = False

    def ingest(self, t: float, direction, pupil_left: float, pupil_right: float,
               confidence: float) -> None:
        self._times.append(t)
        d0, d1, d2 = direction
        self._rows.push((t, d0, d1, d2, pupil_left, pupil_right, confidence))
        self._seg.feed(t, (d0, d1, d2))

    def _bounds(self, start: float, end: float) -> tuple[int, int]:
        return bisect_left(self._times, start), bisect_left(self._times, end)

    def _fixations_in(self, start: float, end: float) -> list[Fixation]:
        out = [f for f in self._seg.completed if f.end > start and f.start < end]
        cand = self._seg.open_candidate()
        if cand is not None and cand.end > start and cand.start < end:
            out.append(cand)
        return out

    def _window_stats(self, start: float, end: float,
                      baseline_mm: float | None) -> tuple[PupilFeatures | None, float | None, float | None, float]:
        lo, hi = self._bounds(start, end)
        if hi <= lo:
            return None, None, None, 0.0
        rows = self._rows.view(lo, hi)
        t = rows[:, self._T]
        conf = rows[:, self._CONF]
        pupil = filter_pupil(t, rows[:, self._PL], rows[:, self._PR], conf, baseline_mm)
        fixations = self._fixations_in(start, end)
        mean_fix = (sum(f.duration for f in fixations) / len(fixations)) if fixations else None
        saccades = detect_saccades(t, rows[:, self._DX:self._DZ + 1],
                                   exclude_spans=[(f.start, f.end) for f in fixations])
        span_min = float(t[-1] - t[0]) / 60.0
        rate = (len(saccades) / span_min) if span_min > 0 else None
        loss = float((conf < CONFIDENCE_MIN).sum()) / len(conf)
        return pupil, mean_fix, rate, loss

    def establish_baseline(self) -> GazeBaseline | None:
        if self.baseline is not None or self.baseline_failed:
            return self.baseline
        pupil, mean_fix, rate, loss = self._window_stats(*BASELINE_SPAN, baseline_mm=None)
        if pupil is None or mean_fix is None or rate is None:
            self.baseline_failed = True
            return None
        self.baseline = GazeBaseline(
            pupil_mm=pupil.smoothed_mm,
            asymmetry_pct=pupil.asymmetry_pct if pupil.asymmetry_pct is not None else 0.0,
            fixation_s=mean_fix,
            saccade_per_min=rate,
            loss_rate=max(loss, LOSS_RATE_FLOOR),
        )
        return self.baseline

    def report_at(self, t: float) -> GazeReport | None:
        if t < BASELINE_SPAN[1]:
            return None
        if self.establish_baseline() is None:
            return None
        base = self.baseline
        pupil, mean_fix, rate, loss = self._window_stats(t - WINDOW_S, t, base.pupil_mm)
        load = score_cognitive_load(
            pupil.change_pct if pupil else None,
            pupil.asymmetry_pct if pupil else None,
            mean_fix, rate, base,
        )
        fatigue = (loss > FATIGUE_LOSS_FACTOR * base.loss_rate
                   and mean_fix is not None
                   and mean_fix > FATIGUE_FIXATION_FACTOR * base.fixation_s)
        return GazeReport(load=load, pupil=pupil, mean_fixation_s=mean_fix,
                          saccade_per_min=rate, fatigue=fatigue, t=t)

    def reset(self) -> None:
        self.__init__(self.rate_hz)
