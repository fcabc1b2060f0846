"""Timestamped stream model, session clock, buffers and recording replay.

All timestamps are seconds since session start (t=0). Recordings are plain
text: a header of stream descriptor lines followed by one record per line,
which keeps fixtures diffable and parsing trivially streamable.
"""

from __future__ import annotations

import json
import time
from bisect import bisect_left
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Mapping

import numpy as np


class StreamKind(str, Enum):
    ECG = "ecg"
    GAZE = "gaze"
    LANDMARKS = "landmarks"
    SCREENSHOT = "screenshot"
    EGOCENTRIC = "egocentric"


# Nominal sampling rates per stream kind (Hz).
NOMINAL_RATE_HZ = {
    StreamKind.ECG: 125.0,
    StreamKind.GAZE: 120.0,
    StreamKind.LANDMARKS: 30.0,
    StreamKind.SCREENSHOT: 1.0 / 15.0,
    StreamKind.EGOCENTRIC: 1.0 / 15.0,
}


class RecordingError(Exception):
    """Raised for unreadable or malformed session recordings."""

    def __init__(self, message: str, position: int | None = None):
        super().__init__(message if position is None else f"{message} (record {position})")
        self.position = position


@dataclass(frozen=True)
class StreamDescriptor:
    stream_id: str
    kind: StreamKind
    nominal_rate_hz: float

    def __post_init__(self):
        if self.nominal_rate_hz <= 0:
            raise ValueError("nominal rate must be positive")


@dataclass(frozen=True)
class SampleEnvelope:
    """One timestamped payload on a named stream; the universal transport unit."""

    stream_id: str
    t: float
    payload: object


class SessionClock:
    """Session-relative clock.

    Virtual mode advances only when told to; real mode tracks wall time from
    ``start()``. Every scheduler in the engine reads the same instance.
    """

    def __init__(self, mode: str = "virtual"):
        if mode not in ("virtual", "real"):
            raise ValueError(f"unknown clock mode {mode!r}")
        self.mode = mode
        self._t = 0.0
        self._epoch: float | None = None

    def start(self) -> None:
        if self.mode == "real":
            self._epoch = time.monotonic()
        self._t = 0.0

    def now(self) -> float:
        if self.mode == "real":
            if self._epoch is None:
                return 0.0
            return time.monotonic() - self._epoch
        return self._t

    def advance(self, to: float) -> None:
        if self.mode != "virtual":
            raise RuntimeError("only a virtual clock can be advanced explicitly")
        if to < self._t:
            raise ValueError(f"clock cannot move backwards ({to} < {self._t})")
        self._t = to


class GrowBuffer:
    """Append-mostly numeric store exposing cheap window views.

    Doubles capacity on demand; ``view`` returns a read-only slice of the
    backing array, so per-tick windowing never copies sample data.
    """

    def __init__(self, width: int = 0, capacity: int = 1024):
        self.width = width
        shape = (capacity,) if width == 0 else (capacity, width)
        self._a = np.empty(shape, dtype=float)
        self.n = 0

    def __len__(self) -> int:
        return self.n

    def push(self, value) -> None:
        if self.n == len(self._a):
            self._a = np.concatenate([self._a, np.empty_like(self._a)])
        self._a[self.n] = value
        self.n += 1

    def view(self, lo: int = 0, hi: int | None = None) -> np.ndarray:
        return self._a[lo:self.n if hi is None else min(hi, self.n)]

    def clear(self) -> None:
        self.n = 0


class StreamBuffer:
    """Append-only per-stream sample store with half-open window queries.

    Duplicate timestamps are kept in arrival order; out-of-order appends are
    rejected (ordering is validated once at recording open).
    """

    def __init__(self, stream_id: str):
        self.stream_id = stream_id
        self.times: list[float] = []
        self.payloads: list[object] = []

    def __len__(self) -> int:
        return len(self.times)

    def append(self, t: float, payload: object) -> None:
        if self.times and t < self.times[-1]:
            raise ValueError(f"stream {self.stream_id}: non-monotone timestamp {t}")
        self.times.append(t)
        self.payloads.append(payload)

    def window(self, start: float, duration: float) -> list[tuple[float, object]]:
        """Samples with start <= t < start + duration, in order."""
        if duration <= 0:
            raise ValueError("window duration must be positive")
        lo = bisect_left(self.times, start)
        hi = bisect_left(self.times, start + duration)
        return list(zip(self.times[lo:hi], self.payloads[lo:hi]))

    def latest_at(self, t: float) -> tuple[float, object] | None:
        """Most recent sample with timestamp <= t, or None."""
        hi = bisect_left(self.times, t)
        if hi < len(self.times) and self.times[hi] == t:
            # include ties at t; step past equal timestamps
            while hi + 1 < len(self.times) and self.times[hi + 1] == t:
                hi += 1
            return self.times[hi], self.payloads[hi]
        if hi == 0:
            return None
        return self.times[hi - 1], self.payloads[hi - 1]


@dataclass
class SessionRecording:
    """Parsed, validated session recording: descriptors plus time-sorted records."""

    descriptors: dict[str, StreamDescriptor]
    records: list[SampleEnvelope]
    path: Path | None = None

    @property
    def duration(self) -> float:
        return self.records[-1].t if self.records else 0.0


def open_recording(path: str | Path) -> SessionRecording:
    """Parse and validate a recording file.

    Header lines: ``stream <id> <kind> <rate_hz>``. Record lines:
    ``<id>\\t<t>\\t<payload json>``. Records must be sorted by t (ties allowed)
    and reference declared streams only.
    """
    path = Path(path)
    if not path.exists():
        raise RecordingError(f"missing recording file: {path}")
    descriptors: dict[str, StreamDescriptor] = {}
    records: list[SampleEnvelope] = []
    parse_cache: dict[str, object] = {}
    last_t = None
    position = 0
    with path.open("r", encoding="utf-8") as fh:
        in_header = True
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            if in_header and line.startswith("stream "):
                parts = line.split()
                if len(parts) != 4:
                    raise RecordingError(f"malformed header line {lineno}: {line!r}")
                _, sid, kind_s, rate_s = parts
                try:
                    kind = StreamKind(kind_s)
                    rate = float(rate_s)
                except ValueError as exc:
                    raise RecordingError(f"malformed header line {lineno}: {exc}") from exc
                if sid in descriptors:
                    raise RecordingError(f"duplicate stream id {sid!r} in header")
                descriptors[sid] = StreamDescriptor(sid, kind, rate)
                continue
            if in_header:
                if not descriptors:
                    raise RecordingError("malformed header: no stream descriptors")
                in_header = False
            position += 1
            parts = line.split("\t", 2)
            if len(parts) != 3:
                raise RecordingError("malformed record", position)
            sid, t_s, payload_s = parts
            if sid not in descriptors:
                raise RecordingError(f"undeclared stream id {sid!r}", position)
            try:
                t = float(t_s)
                if len(payload_s) >= 200:
                    # long payloads repeat heavily (landmark frames); reuse parses
                    payload = parse_cache.get(payload_s)
                    if payload is None:
                        payload = json.loads(payload_s)
                        parse_cache[payload_s] = payload
                else:
                    payload = json.loads(payload_s)
            except ValueError as exc:
                raise RecordingError(f"unparseable record: {exc}", position)
            if t < 0:
                raise RecordingError("negative timestamp", position)
            if last_t is not None and t < last_t:
                raise RecordingError("out-of-order timestamp", position)
            last_t = t
            records.append(SampleEnvelope(sid, t, payload))
    if not descriptors:
        raise RecordingError("malformed header: empty file")
    return SessionRecording(descriptors=descriptors, records=records, path=path)


def write_recording(path: str | Path,
                    descriptors: list[StreamDescriptor],
                    records: list[SampleEnvelope]) -> Path:
    """Serialize a recording; records are sorted by (t, original order)."""
    path = Path(path)
    ordered = sorted(enumerate(records), key=lambda ir: (ir[1].t, ir[0]))
    dump_cache: dict[int, str] = {}   # id(payload) -> json; repeated frames dump once
    keepalive = []
    with path.open("w", encoding="utf-8") as fh:
        for d in descriptors:
            fh.write(f"stream {d.stream_id} {d.kind.value} {d.nominal_rate_hz:g}\n")
        for _, rec in ordered:
            key = id(rec.payload)
            blob = dump_cache.get(key)
            if blob is None:
                blob = json.dumps(rec.payload, separators=(",", ":"))
                if len(blob) >= 200:
                    dump_cache[key] = blob
                    keepalive.append(rec.payload)
            fh.write(f"{rec.stream_id}\t{rec.t!r}\t{blob}\n")
    return path


@dataclass
class ReplaySummary:
    delivered: dict[str, int] = field(default_factory=dict)
    total: int = 0
    completed: bool = True
    error: str | None = None
    error_position: int | None = None


def replay(recording: SessionRecording,
           clock: SessionClock,
           sinks: Mapping[str, Callable[[SampleEnvelope], None]],
           duration: float | None = None,
           speed: float | str = "max") -> ReplaySummary:
    """Deliver every record to its stream's consumer in timestamp order.

    The clock is advanced to each record's t before delivery and to
    ``duration`` (default: last record t) at the end, so time-driven consumers
    observe the full session span. ``speed`` of "max" replays as fast as
    consumers permit; a positive float rate-limits against wall time.
    """
    pace = None if speed == "max" else float(speed)
    if pace is not None and pace <= 0:
        raise ValueError("speed must be positive or 'max'")
    summary = ReplaySummary(delivered={sid: 0 for sid in recording.descriptors})
    prev_t = 0.0
    for idx, rec in enumerate(recording.records, start=1):
        if pace is not None and rec.t > prev_t:
            time.sleep((rec.t - prev_t) / pace)
        if clock.mode == "virtual" and rec.t > clock.now():
            clock.advance(rec.t)
        prev_t = rec.t
        sink = sinks.get(rec.stream_id)
        if sink is None:
            continue
        try:
            sink(rec)
        except Exception as exc:  # consumer rejection aborts with partial summary
            summary.completed = False
            summary.error = f"{type(exc).__name__}: {exc}"
            summary.error_position = idx
            return summary
        summary.delivered[rec.stream_id] += 1
        summary.total += 1
    end = max(duration or 0.0, recording.duration)
    if clock.mode == "virtual" and end > clock.now():
        clock.advance(end)
    return summary
