"""Synthetic session generators: the replay stand-in for live sensors.

Every generator is seeded and returns ground truth alongside the samples, so
tests can check detectors against what was actually synthesized. Scenario
builders assemble full multi-stream recordings for end-to-end replays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .posture import BACK_ANGLE_SATURATION_DEG, LANDMARK_COUNT
from .streams import (NOMINAL_RATE_HZ, SampleEnvelope, SessionRecording,
                      StreamDescriptor, StreamKind, write_recording)

ECG_RATE = 125.0
GAZE_RATE = 120.0
POSE_RATE = 30.0
VISUAL_PERIOD = 15.0
VISUAL_PHASE = 14.0   # capture frames 1 s before each snapshot tick


# -- ECG -----------------------------------------------------------------------

# Gaussian bump mix approximating one beat; R apex exactly at tau=0.
_WAVES = (  # (amplitude mV, center s, sigma s)
    (0.10, -0.180, 0.030),   # P
    (-0.15, -0.025, 0.010),  # Q
    (1.00, 0.000, 0.012),    # R
    (-0.20, 0.025, 0.010),   # S
    (0.30, 0.220, 0.045),    # T
)


def ecg_trace(beat_times, duration: float, rate_hz: float = ECG_RATE,
              snr_db: float | None = None, seed: int = 0):
    """Sampled ECG with beats at the given times; returns (t, mv).

    ``snr_db`` adds white noise at that signal-to-noise ratio; None keeps the
    trace clean.
    """
    t = np.arange(0.0, duration, 1.0 / rate_hz)
    x = np.zeros_like(t)
    for b in np.asarray(beat_times, dtype=float):
        lo = np.searchsorted(t, b - 0.45)
        hi = np.searchsorted(t, b + 0.45)
        tau = t[lo:hi] - b
        for amp, mu, sigma in _WAVES:
            x[lo:hi] += amp * np.exp(-0.5 * ((tau - mu) / sigma) ** 2)
    if snr_db is not None:
        rng = np.random.default_rng(seed)
        power = float(np.mean(x ** 2))
        sigma = math.sqrt(power / (10.0 ** (snr_db / 10.0)))
        x = x + rng.normal(0.0, sigma, len(x))
    return t, x


def beat_times_from_rr(rr_s, start: float = 0.4) -> np.ndarray:
    """Cumulative beat times from RR intervals (seconds)."""
    rr = np.asarray(rr_s, dtype=float)
    return start + np.concatenate([[0.0], np.cumsum(rr)])


def steady_beats(duration: float, rr_mean_s: float = 0.8, jitter_s: float = 0.02,
                 seed: int = 1, start: float = 0.4) -> np.ndarray:
    """Beat times with uniform RR jitter; covers [start, duration)."""
    rng = np.random.default_rng(seed)
    beats = [start]
    while beats[-1] < duration:
        beats.append(beats[-1] + rr_mean_s + rng.uniform(-jitter_s, jitter_s))
    return np.asarray(beats[:-1])


# -- gaze ------------------------------------------------------------------------

def direction(azimuth_deg: float, elevation_deg: float) -> np.ndarray:
    az, el = math.radians(azimuth_deg), math.radians(elevation_deg)
    return np.array([math.sin(az) * math.cos(el), math.sin(el), math.cos(az) * math.cos(el)])


def _slerp(u: np.ndarray, v: np.ndarray, frac: float) -> np.ndarray:
    dot = float(np.clip(np.dot(u, v), -1.0, 1.0))
    omega = math.acos(dot)
    if omega < 1e-12:
        return u
    return (math.sin((1 - frac) * omega) * u + math.sin(frac * omega) * v) / math.sin(omega)


@dataclass
class GazeTrace:
    t: np.ndarray
    directions: np.ndarray
    true_fixations: list          # (start, duration) per dwell block
    true_saccade_velocity: float | None


def scripted_gaze(segments, rate_hz: float = GAZE_RATE, jitter_deg: float = 0.0,
                  transit_samples: int = 3, seed: int = 2) -> GazeTrace:
    """Dwell blocks at listed targets with constant-velocity transits between.

    ``segments`` is a list of (azimuth_deg, elevation_deg, dwell_s). Ground
    truth fixations are the dwell blocks; transit velocity is reported for
    saccade checks.
    """
    rng = np.random.default_rng(seed)
    dt = 1.0 / rate_hz
    times: list[float] = []
    dirs: list[np.ndarray] = []
    truth: list[tuple] = []
    sacc_vel = None
    now = 0.0
    prev = None
    for az, el, dwell in segments:
        target = direction(az, el)
        if prev is not None:
            angle = math.degrees(math.acos(float(np.clip(np.dot(prev, target), -1, 1))))
            sacc_vel = (angle / transit_samples) / dt
            for k in range(1, transit_samples + 1):
                times.append(now)
                dirs.append(_slerp(prev, target, k / transit_samples))
                now += dt
        n = int(round(dwell * rate_hz))
        start = now
        for _ in range(n):
            v = target
            if jitter_deg > 0:
                v = v + rng.normal(0.0, math.radians(jitter_deg), 3)
                v = v / np.linalg.norm(v)
            times.append(now)
            dirs.append(v)
            now += dt
        truth.append((start, (n - 1) * dt))
        prev = target
    return GazeTrace(np.asarray(times), np.asarray(dirs), truth, sacc_vel)


def gaze_stream(duration: float, rate_hz: float = GAZE_RATE,
                dwell_s: float = 2.0, hop_deg: float = 8.0,
                pupil_mm: float = 4.0, pupil_fn=None,
                jitter_deg: float = 0.05, blink_every_s: float = 5.0,
                blink_len_s: float = 0.1, seed: int = 3):
    """Alternating two-target gaze with pupil and confidence channels.

    Returns (t, directions, pupil_left, pupil_right, confidence).
    ``pupil_fn(t) -> (left, right)`` overrides the constant diameter.
    """
    rng = np.random.default_rng(seed)
    dt = 1.0 / rate_hz
    n = int(round(duration * rate_hz))
    t = np.arange(n) * dt
    a, b = direction(0.0, 0.0), direction(hop_deg, 0.0)
    dirs = np.empty((n, 3))
    period = 2 * dwell_s
    for i, ti in enumerate(t):
        target = a if (ti % period) < dwell_s else b
        v = target + rng.normal(0.0, math.radians(jitter_deg), 3)
        dirs[i] = v / np.linalg.norm(v)
    if pupil_fn is None:
        pl = pupil_mm + rng.normal(0.0, 0.005, n)
        pr = pupil_mm + rng.normal(0.0, 0.005, n)
    else:
        pl, pr = np.empty(n), np.empty(n)
        for i, ti in enumerate(t):
            pl[i], pr[i] = pupil_fn(ti)
    conf = np.full(n, 0.95)
    if blink_every_s:
        mask = (t % blink_every_s) < blink_len_s
        conf[mask] = 0.2
    return t, dirs, pl, pr, conf


# -- posture -----------------------------------------------------------------------

def make_landmarks(shoulder: float, neck: float, back: float,
                   visibility: float = 0.95) -> tuple:
    """Inverse of the component scoring: a 33-landmark tuple whose computed
    component scores equal (shoulder, neck, back) exactly."""
    pts = [(0.5, 0.8, 0.0, visibility)] * LANDMARK_COUNT
    r = 1.0 - shoulder / 100.0
    half_w = 0.1
    dy = 0.0 if r <= 0 else 2 * half_w * r / math.sqrt(1.0 - r * r) if r < 1 else 10.0
    ls = (0.5 - half_w, 0.6 - dy / 2.0, 0.0, visibility)
    rs = (0.5 + half_w, 0.6 + dy / 2.0, 0.0, visibility)

    head_depth = 0.1
    nose_z = -(1.0 - neck / 100.0) * head_depth
    angle = math.radians((1.0 - back / 100.0) * BACK_ANGLE_SATURATION_DEG)
    rise = 0.18
    ear_z = rise * math.tan(angle)
    le = (0.45, 0.42, ear_z, visibility)
    re = (0.55, 0.42, ear_z, visibility)
    nose = (0.5, 0.40, nose_z, visibility)

    pts[0] = nose
    pts[7], pts[8] = le, re
    pts[11], pts[12] = ls, rs
    return tuple(pts)


def pose_stream(duration: float, schedule, rate_hz: float = POSE_RATE):
    """Landmark frames where ``schedule(t) -> (shoulder, neck, back)``."""
    n = int(round(duration * rate_hz))
    t = np.arange(n) / rate_hz
    cache: dict = {}
    frames = []
    for ti in t:
        scores = schedule(ti)
        frame = cache.get(scores)
        if frame is None:
            frame = cache[scores] = make_landmarks(*scores)
        frames.append(frame)
    return t, frames


# -- scenario recordings --------------------------------------------------------------

STREAM_IDS = {"ecg": "ecg", "gaze": "gaze", "pose": "pose",
              "screen": "screen", "world": "world"}

GOOD_POSTURE = (79.0, 95.0, 86.0)
POOR_POSTURE = (35.0, 40.0, 30.0)


def _descriptors() -> list[StreamDescriptor]:
    return [
        StreamDescriptor("ecg", StreamKind.ECG, NOMINAL_RATE_HZ[StreamKind.ECG]),
        StreamDescriptor("gaze", StreamKind.GAZE, NOMINAL_RATE_HZ[StreamKind.GAZE]),
        StreamDescriptor("pose", StreamKind.LANDMARKS, NOMINAL_RATE_HZ[StreamKind.LANDMARKS]),
        StreamDescriptor("screen", StreamKind.SCREENSHOT, NOMINAL_RATE_HZ[StreamKind.SCREENSHOT]),
        StreamDescriptor("world", StreamKind.EGOCENTRIC, NOMINAL_RATE_HZ[StreamKind.EGOCENTRIC]),
    ]


def _visual_records(duration: float, stream_id: str, fixture_fn) -> list[SampleEnvelope]:
    out = []
    t = VISUAL_PHASE
    while t <= duration:
        out.append(SampleEnvelope(stream_id, t, {"fixture": fixture_fn(t)}))
        t += VISUAL_PERIOD
    return out


def build_scenario(name: str, duration: float, seed: int = 11) -> tuple[list[StreamDescriptor], list[SampleEnvelope]]:
    """Assemble descriptor + record lists for one named scenario.

    Scenarios: nominal, poor_posture, poor_posture_brief, distraction,
    distraction_brief, struggle, stress.
    """
    if name not in SCENARIOS:
        raise ValueError(f"unknown scenario {name!r} (have {sorted(SCENARIOS)})")
    spec = SCENARIOS[name]
    records: list[SampleEnvelope] = []

    if name == "stress":
        rng = np.random.default_rng(seed)
        beats = [0.4]
        while beats[-1] < duration:
            rr = 0.8 + rng.normal(0.0, 0.04) if beats[-1] < 120.0 else 0.69 + rng.normal(0.0, 0.005)
            beats.append(beats[-1] + max(rr, 0.4))
        t_ecg, mv = ecg_trace(np.asarray(beats[:-1]), duration, snr_db=30.0, seed=seed)
    else:
        t_ecg, mv = ecg_trace(steady_beats(duration, seed=seed), duration, snr_db=30.0, seed=seed)
    records += [SampleEnvelope("ecg", float(ti), round(float(x), 6))
                for ti, x in zip(t_ecg, mv)]

    t_g, dirs, pl, pr, conf = gaze_stream(duration, seed=seed + 1)
    records += [SampleEnvelope("gaze", float(ti),
                               {"d": [round(float(v), 6) for v in d],
                                "pl": round(float(l), 4), "pr": round(float(r), 4),
                                "conf": round(float(c), 3)})
                for ti, d, l, r, c in zip(t_g, dirs, pl, pr, conf)]

    posture_window = spec.get("poor_posture_window")

    def posture_at(ti: float):
        if posture_window and posture_window[0] <= ti < posture_window[1]:
            return POOR_POSTURE
        return GOOD_POSTURE

    t_p, frames = pose_stream(duration, posture_at)
    payload_cache: dict = {}  # piecewise-constant schedules repeat frames
    for ti, frame in zip(t_p, frames):
        payload = payload_cache.get(frame)
        if payload is None:
            payload = {"pts": [list(pt) for pt in frame]}
            payload_cache[frame] = payload
        records.append(SampleEnvelope("pose", float(ti), payload))

    distract_window = spec.get("distraction_window")

    def screen_fixture(ti: float) -> str:
        if distract_window and distract_window[0] <= ti < distract_window[1]:
            return "screen_social"
        return spec["screen"]

    def world_fixture(ti: float) -> str:
        if distract_window and distract_window[0] <= ti < distract_window[1]:
            return "world_phone"
        return spec["world"]

    records += _visual_records(duration, "screen", screen_fixture)
    records += _visual_records(duration, "world", world_fixture)
    records.sort(key=lambda r: r.t)
    return _descriptors(), records


SCENARIOS = {
    # steady focused front-end work; canonical task, so periodic suggestions
    "nominal": {"screen": "screen_frontend", "world": "world_ide"},
    # sustained poor posture for ~56 s starting at 130 s; neutral screen task
    "poor_posture": {"screen": "screen_desktop", "world": "world_ide",
                     "poor_posture_window": (130.0, 186.0)},
    # only ~30 s of poor posture: below the persistence requirement
    "poor_posture_brief": {"screen": "screen_desktop", "world": "world_ide",
                           "poor_posture_window": (140.0, 170.0)},
    # phone + social feed for ~56 s starting at 130 s
    "distraction": {"screen": "screen_desktop", "world": "world_ide",
                    "distraction_window": (130.0, 186.0)},
    "distraction_brief": {"screen": "screen_desktop", "world": "world_ide",
                          "distraction_window": (140.0, 170.0)},
    # repeated on-screen errors during front-end work -> task suggestion
    "struggle": {"screen": "screen_frontend_errors", "world": "world_ide"},
    # elevated HR / collapsed HRV from 120 s on; neutral screen task
    "stress": {"screen": "screen_desktop", "world": "world_ide"},
}

SCENARIO_DEFAULT_DURATION = {
    "nominal": 600.0,
    "poor_posture": 300.0,
    "poor_posture_brief": 300.0,
    "distraction": 300.0,
    "distraction_brief": 300.0,
    "struggle": 300.0,
    "stress": 330.0,
}


def write_scenario(path, name: str, duration: float | None = None, seed: int = 11) -> SessionRecording:
    duration = duration or SCENARIO_DEFAULT_DURATION[name]
    descriptors, records = build_scenario(name, duration, seed=seed)
    write_recording(path, descriptors, records)
    return SessionRecording(descriptors={d.stream_id: d for d in descriptors},
                            records=records, path=path)
