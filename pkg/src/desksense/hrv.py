"""ECG stream -> R-peaks, RR intervals, time-domain HRV, baseline-relative stress.

Pipeline per B-style HRV practice: discard the first 60 s, build a personal
baseline over the next 60 s, then evaluate a 60-second sliding window once per
second and classify stress from baseline-relative changes.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.signal import butter, find_peaks, sosfiltfilt

from .posture import round_half_up
from .streams import GrowBuffer

ECG_RATE_HZ = 125.0
REFRACTORY_S = 0.250            # bounds HR at 240 bpm
BANDPASS_HZ = (5.0, 15.0)
INTEGRATION_WINDOW_S = 0.150
RR_BOUNDS_MS = (300.0, 2000.0)  # physiological plausibility guard

STABILIZE_S = 60.0              # discarded for sensor settling
BASELINE_SPAN = (60.0, 120.0)   # calibration window [60 s, 120 s)
WINDOW_S = 60.0                 # sliding metric window
UPDATE_S = 1.0

HR_MARGIN_PCT = 5.0
HRV_MARGIN_PCT = 10.0           # applies to SDNN and RMSSD changes

STRESS_LEVELS = ("low", "normal", "moderate", "high")

INTERPRETATION = {
    "low": "HRV metrics show increased parasympathetic activity, suggesting a relaxed physiological state.",
    "normal": "HR and HRV remain within personal baseline margins, showing no significant signs of stress.",
    "moderate": "One or more cardiac metrics deviate noticeably from baseline, suggesting elevated arousal.",
    "high": "Elevated heart rate with reduced HRV reflects sympathetic dominance and an acute stress response.",
}

PRACTICAL_INSIGHT = {
    "low": "User is in a calm, focused state conducive to sustained cognitive work without physiological strain.",
    "normal": "User's cardiac state is steady; current workload appears physiologically sustainable.",
    "moderate": "User shows early physiological strain; a brief pause or slower pacing may help.",
    "high": "User shows acute stress markers; a short break or breathing pause is advisable.",
}


class InsufficientData(ValueError):
    """Not enough samples/intervals for the requested computation."""


@lru_cache(maxsize=8)
def _bandpass_sos(rate_hz: float) -> np.ndarray:
    return butter(2, BANDPASS_HZ, btype="bandpass", fs=rate_hz, output="sos")


def _earliest_apex(window: np.ndarray) -> int:
    """First local maximum above 60 % of the window peak, so a merged beat
    pair resolves to its first apex; falls back to the global maximum.

    Plain-Python scan: the windows are ~25 samples, below numpy's call
    overhead.
    """
    w = window.tolist()
    n = len(w)
    best, best_v = 0, w[0]
    for k in range(1, n):
        if w[k] > best_v:
            best, best_v = k, w[k]
    if n < 3:
        return best
    threshold = 0.6 * best_v
    for k in range(1, n - 1):
        v = w[k]
        if v >= threshold and v >= w[k - 1] and v > w[k + 1]:
            return k
    return best


class BaselineFailure(RuntimeError):
    """Calibration window had fewer than 2 valid RR intervals."""


@dataclass(frozen=True)
class HrvMetrics:
    hr_bpm: float
    sdnn_ms: float
    rmssd_ms: float
    pnn20_pct: float
    pnn50_pct: float
    n_intervals: int


@dataclass(frozen=True)
class BaselineProfile:
    metrics: HrvMetrics
    window_start: float
    window_end: float


@dataclass(frozen=True)
class StressAssessment:
    level: str
    confidence: int          # 0-100
    interpretation: str


@dataclass(frozen=True)
class HrvReport:
    metrics: HrvMetrics
    changes: dict            # metric name -> signed % change or None (undefined)
    stress: StressAssessment
    t: float

    def to_doc(self) -> dict:
        m, c = self.metrics, self.changes
        return {
            "hrv_metrics": {
                "heart_rate": _fmt(m.hr_bpm, "bpm", c["hr"], 1),
                "sdnn": _fmt(m.sdnn_ms, "ms", c["sdnn"], 2),
                "rmssd": _fmt(m.rmssd_ms, "ms", c["rmssd"], 2),
                "pnn20": _fmt(m.pnn20_pct, "%", c["pnn20"], 1),
                "pnn50": _fmt(m.pnn50_pct, "%", c["pnn50"], 1),
            },
            "stress_analysis": {
                "level": self.stress.level,
                "confidence": self.stress.confidence,
                "interpretation": self.stress.interpretation,
            },
            "practical_insight": PRACTICAL_INSIGHT[self.stress.level],
        }


def _fmt(value: float, unit: str, change: float | None, digits: int) -> str:
    val = f"{value:.{digits}f}{'%' if unit == '%' else ' ' + unit}"
    chg = "n/a" if change is None else f"{change:.1f}%"
    return f"{val} (change: {chg})"


def detect_r_peaks(times: np.ndarray, amplitudes: np.ndarray,
                   rate_hz: float = ECG_RATE_HZ) -> np.ndarray:
    """QRS detection: zero-phase bandpass, squared derivative, moving-window
    integration, adaptive signal/noise thresholds, 250 ms refractory.

    Returns the timestamps of R apexes. A flatline yields an empty array; a
    window spanning under 2 s raises InsufficientData.
    """
    times = np.asarray(times, dtype=float)
    x = np.asarray(amplitudes, dtype=float)
    if len(times) < 2 or times[-1] - times[0] < 2.0:
        raise InsufficientData("need at least 2 s of ECG samples")
    if np.ptp(x) < 1e-12:
        return np.empty(0)

    bp = sosfiltfilt(_bandpass_sos(rate_hz), x)
    sq = np.gradient(bp) ** 2
    win = max(1, int(round(INTEGRATION_WINDOW_S * rate_hz)))
    mwi = np.convolve(sq, np.ones(win) / win, mode="same")

    min_dist = max(1, int(round(REFRACTORY_S * rate_hz)))
    cand, _ = find_peaks(mwi, distance=min_dist)
    if len(cand) == 0:
        return np.empty(0)

    # Adaptive running estimates of signal and noise peak levels.
    lead = mwi[: int(2.0 * rate_hz)]
    spki = 0.4 * float(lead.max())
    npki = 0.5 * float(lead.mean())
    back = max(1, int(round(0.150 * rate_hz)))   # integration delays the MWI peak
    fwd = max(1, int(round(0.050 * rate_hz)))
    accepted_idx: list[int] = []
    for i in cand:
        threshold = npki + 0.25 * (spki - npki)
        if mwi[i] > threshold:
            spki = 0.125 * mwi[i] + 0.875 * spki
            lo = max(0, i - back)
            hi = min(len(bp), i + fwd + 1)
            accepted_idx.append(lo + _earliest_apex(bp[lo:hi]))
        else:
            npki = 0.125 * mwi[i] + 0.875 * npki

    if not accepted_idx:
        return np.empty(0)
    # Refinement can pull neighbors together; enforce the refractory period,
    # keeping the earlier peak.
    peaks: list[int] = []
    for idx in sorted(set(accepted_idx)):
        if peaks and times[idx] - times[peaks[-1]] < REFRACTORY_S:
            continue
        peaks.append(idx)
    return times[np.array(peaks, dtype=int)]


def rr_from_peaks(peak_times: np.ndarray) -> np.ndarray:
    """Successive R-peak spacings in milliseconds."""
    peak_times = np.asarray(peak_times, dtype=float)
    if len(peak_times) < 2:
        return np.empty(0)
    return np.diff(peak_times) * 1000.0


def clean_rr(rr_ms: np.ndarray) -> np.ndarray:
    """Drop intervals outside the physiological [300, 2000] ms band."""
    rr_ms = np.asarray(rr_ms, dtype=float)
    lo, hi = RR_BOUNDS_MS
    return rr_ms[(rr_ms >= lo) & (rr_ms <= hi)]


def compute_metrics(rr_ms) -> HrvMetrics:
    """Time-domain HRV from an RR series (ms).

    SDNN uses the sample standard deviation (n-1). pNN20/pNN50 count strict
    '>' exceedances of the successive-difference magnitude.
    """
    rr = np.asarray(rr_ms, dtype=float)
    if len(rr) < 2:
        raise InsufficientData("need at least 2 RR intervals")
    d = np.diff(rr)
    return HrvMetrics(
        hr_bpm=60000.0 / float(rr.mean()),
        sdnn_ms=float(rr.std(ddof=1)),
        rmssd_ms=float(np.sqrt(np.mean(d ** 2))),
        pnn20_pct=100.0 * float(np.sum(np.abs(d) > 20.0)) / len(d),
        pnn50_pct=100.0 * float(np.sum(np.abs(d) > 50.0)) / len(d),
        n_intervals=len(rr),
    )


def relative_change(current: HrvMetrics, baseline: HrvMetrics) -> dict:
    """Signed % change per metric; None where the baseline value is zero."""
    out = {}
    for key, cur, base in (
        ("hr", current.hr_bpm, baseline.hr_bpm),
        ("sdnn", current.sdnn_ms, baseline.sdnn_ms),
        ("rmssd", current.rmssd_ms, baseline.rmssd_ms),
        ("pnn20", current.pnn20_pct, baseline.pnn20_pct),
        ("pnn50", current.pnn50_pct, baseline.pnn50_pct),
    ):
        out[key] = None if base == 0.0 else 100.0 * (cur - base) / base
    return out


def classify_stress(changes: dict) -> StressAssessment:
    """Four-level stress classification from baseline-relative changes.

    Patterns (margins: HR +/-5 %, SDNN/RMSSD +/-10 %):
      high     HR up beyond margin AND both SDNN and RMSSD down beyond margin
      low      HR decreased at all AND SDNN or RMSSD up beyond margin
      normal   every defined change inside its margin
      moderate anything else beyond a margin without a full pattern
    Confidence = 50 + 10 per direction-agreeing metric + 0.5 * mean margin
    excess, clamped to [0, 100]; undefined changes are excluded throughout.
    """
    hr = changes.get("hr")
    sdnn = changes.get("sdnn")
    rmssd = changes.get("rmssd")
    defined = {k: v for k, v in (("hr", hr), ("sdnn", sdnn), ("rmssd", rmssd)) if v is not None}
    if not defined or hr is None:
        return StressAssessment("normal", 30, INTERPRETATION["normal"])

    margins = {"hr": HR_MARGIN_PCT, "sdnn": HRV_MARGIN_PCT, "rmssd": HRV_MARGIN_PCT}
    beyond = {k: abs(v) > margins[k] for k, v in defined.items()}

    hrv_up = [k for k in ("sdnn", "rmssd") if defined.get(k) is not None and defined[k] >= margins[k]]
    hrv_down = [k for k in ("sdnn", "rmssd") if defined.get(k) is not None and defined[k] <= -margins[k]]
    n_hrv = sum(1 for k in ("sdnn", "rmssd") if k in defined)

    if hr >= HR_MARGIN_PCT and n_hrv > 0 and len(hrv_down) == n_hrv:
        level = "high"
        agree = {"hr": hr > 0, "sdnn": defined.get("sdnn", 1) < 0, "rmssd": defined.get("rmssd", 1) < 0}
    elif hr < 0 and hrv_up:
        level = "low"
        agree = {"hr": hr < 0, "sdnn": defined.get("sdnn", -1) > 0, "rmssd": defined.get("rmssd", -1) > 0}
    elif any(beyond.values()):
        level = "moderate"
        agree = beyond
    else:
        level = "normal"
        agree = {k: not beyond[k] for k in defined}

    n_agree = sum(1 for k in defined if agree.get(k))
    excess = sum(max(0.0, abs(v) - margins[k]) for k, v in defined.items()) / len(defined)
    confidence = max(0.0, min(100.0, 50.0 + 10.0 * n_agree + 0.5 * excess))
    return StressAssessment(level, round_half_up(confidence), INTERPRETATION[level])


class HrvAnalyzer:
    """Single consumer of the ECG stream; 1 Hz report snapshots after calibration.

    Phases: "calibrating" before 120 s; "unavailable" for the rest of the
    session if the calibration window held fewer than 2 valid RR intervals;
    "active" otherwise.
    """

    def __init__(self, rate_hz: float = ECG_RATE_HZ):
        self.rate_hz = rate_hz
        self._times: list[float] = []          # mirrors the buffer for bisect
        self._rows = GrowBuffer(width=2)       # (t, mv)
        self.baseline: BaselineProfile | None = None
        self.baseline_failed = False

    def ingest(self, t: float, mv: float) -> None:
        self._times.append(t)
        self._rows.push((t, mv))

    def _window(self, start: float, end: float) -> tuple[np.ndarray, np.ndarray]:
        lo = bisect_left(self._times, start)
        hi = bisect_left(self._times, end)
        rows = self._rows.view(lo, hi)
        return rows[:, 0], rows[:, 1]

    def _window_metrics(self, start: float, end: float) -> HrvMetrics | None:
        t, mv = self._window(start, end)
        if len(t) < 2 or t[-1] - t[0] < 2.0:
            return None
        rr = clean_rr(rr_from_peaks(detect_r_peaks(t, mv, self.rate_hz)))
        if len(rr) < 2:
            return None
        return compute_metrics(rr)

    def establish_baseline(self) -> BaselineProfile:
        """Metrics over the [60 s, 120 s) calibration window."""
        if self.baseline is not None:
            return self.baseline
        metrics = self._window_metrics(*BASELINE_SPAN)
        if metrics is None:
            self.baseline_failed = True
            raise BaselineFailure("fewer than 2 valid RR intervals in [60 s, 120 s)")
        self.baseline = BaselineProfile(metrics, *BASELINE_SPAN)
        return self.baseline

    def phase_at(self, t: float) -> str:
        if t < BASELINE_SPAN[1]:
            return "calibrating"
        if self.baseline is None and not self.baseline_failed:
            try:
                self.establish_baseline()
            except BaselineFailure:
                pass
        return "unavailable" if self.baseline_failed else "active"

    def report_at(self, t: float) -> HrvReport | None:
        """Report over [t-60, t), or None while calibrating / after baseline failure
        / when the current window lacks usable beats."""
        if self.phase_at(t) != "active":
            return None
        current = self._window_metrics(t - WINDOW_S, t)
        if current is None:
            return None
        changes = relative_change(current, self.baseline.metrics)
        return HrvReport(metrics=current, changes=changes, stress=classify_stress(changes), t=t)

    def reset(self) -> None:
        self._times.clear()
        self._rows.clear()
        self.baseline = None
        self.baseline_failed = False
