import pytest

from desksense.streams import (GrowBuffer, RecordingError, SampleEnvelope,
                               SessionClock, StreamBuffer, StreamDescriptor,
                               StreamKind, open_recording, replay,
                               write_recording)


def two_stream_file(path, records=None):
    descriptors = [
        StreamDescriptor("ecg", StreamKind.ECG, 125.0),
        StreamDescriptor("gaze", StreamKind.GAZE, 120.0),
    ]
    if records is None:
        records = [
            SampleEnvelope("ecg", 0.0, 0.1),
            SampleEnvelope("gaze", 0.5, {"d": [0, 0, 1], "pl": 4.0, "pr": 4.0, "conf": 0.9}),
            SampleEnvelope("ecg", 1.0, 0.2),
        ]
    write_recording(path, descriptors, records)
    return path


class TestOpenRecording:
    def test_well_formed_two_streams(self, tmp_path):
        rec = open_recording(two_stream_file(tmp_path / "s.dsr"))
        assert set(rec.descriptors) == {"ecg", "gaze"}
        assert rec.descriptors["ecg"].kind is StreamKind.ECG
        assert rec.descriptors["ecg"].nominal_rate_hz == 125.0
        assert [r.t for r in rec.records] == [0.0, 0.5, 1.0]

    def test_empty_file_is_malformed_header(self, tmp_path):
        path = tmp_path / "empty.dsr"
        path.write_text("")
        with pytest.raises(RecordingError, match="malformed header"):
            open_recording(path)

    def test_out_of_order_rejected_with_position(self, tmp_path):
        path = tmp_path / "ooo.dsr"
        path.write_text("stream ecg ecg 125\n"
                        "ecg\t1.0\t0.1\n"
                        "ecg\t0.5\t0.2\n")
        with pytest.raises(RecordingError, match=r"record 2") as exc:
            open_recording(path)
        assert exc.value.position == 2

    def test_missing_file(self, tmp_path):
        with pytest.raises(RecordingError, match="missing"):
            open_recording(tmp_path / "nope.dsr")

    def test_undeclared_stream_id(self, tmp_path):
        path = tmp_path / "bad.dsr"
        path.write_text("stream ecg ecg 125\nmystery\t0.0\t1\n")
        with pytest.raises(RecordingError, match="undeclared"):
            open_recording(path)

    def test_malformed_header_line(self, tmp_path):
        path = tmp_path / "hdr.dsr"
        path.write_text("stream ecg ecg\n")
        with pytest.raises(RecordingError, match="malformed header"):
            open_recording(path)

    def test_duplicate_timestamps_kept_in_order(self, tmp_path):
        path = two_stream_file(tmp_path / "dup.dsr", records=[
            SampleEnvelope("ecg", 1.0, 1),
            SampleEnvelope("ecg", 1.0, 2),
        ])
        rec = open_recording(path)
        assert [r.payload for r in rec.records] == [1, 2]


class TestReplay:
    def test_all_records_delivered_in_order(self, tmp_path):
        rec = open_recording(two_stream_file(tmp_path / "s.dsr"))
        seen = {"ecg": [], "gaze": []}
        clock = SessionClock("virtual")
        summary = replay(rec, clock, {sid: (lambda r, sid=sid: seen[sid].append(r.t))
                                      for sid in rec.descriptors})
        assert summary.completed and summary.total == 3
        assert summary.delivered == {"ecg": 2, "gaze": 1}
        assert seen == {"ecg": [0.0, 1.0], "gaze": [0.5]}
        assert clock.now() == 1.0

    def test_empty_recording_no_consumer_calls(self, tmp_path):
        path = tmp_path / "e.dsr"
        path.write_text("stream ecg ecg 125\n")
        rec = open_recording(path)
        calls = []
        summary = replay(rec, SessionClock("virtual"), {"ecg": calls.append})
        assert summary.total == 0 and summary.completed and not calls

    def test_consumer_error_aborts_with_partial_summary(self, tmp_path):
        rec = open_recording(two_stream_file(tmp_path / "s.dsr"))
        count = [0]

        def consumer(r):
            count[0] += 1
            if count[0] == 2:
                raise ValueError("rejected")

        summary = replay(rec, SessionClock("virtual"),
                         {"ecg": consumer, "gaze": consumer})
        assert not summary.completed
        assert summary.total == 1           # k-1 delivered
        assert summary.error_position == 2
        assert "rejected" in summary.error

    def test_clock_advanced_to_duration(self, tmp_path):
        rec = open_recording(two_stream_file(tmp_path / "s.dsr"))
        clock = SessionClock("virtual")
        replay(rec, clock, {}, duration=10.0)
        assert clock.now() == 10.0

    def test_per_stream_ordering_preserved_when_interleaved(self, tmp_path):
        records = []
        for i in range(50):
            records.append(SampleEnvelope("ecg", i * 0.1, i))
            records.append(SampleEnvelope("gaze", i * 0.1 + 0.05,
                                          {"d": [0, 0, 1], "pl": 4, "pr": 4, "conf": 1}))
        rec = open_recording(two_stream_file(tmp_path / "i.dsr", records=records))
        seen = {"ecg": [], "gaze": []}
        replay(rec, SessionClock("virtual"),
               {sid: (lambda r, sid=sid: seen[sid].append(r.t)) for sid in seen})
        for sid in seen:
            assert seen[sid] == sorted(seen[sid])
        assert len(seen["ecg"]) == len(seen["gaze"]) == 50

    def test_replay_is_repeatable(self, tmp_path):
        rec = open_recording(two_stream_file(tmp_path / "s.dsr"))
        runs = []
        for _ in range(2):
            seen = []
            replay(rec, SessionClock("virtual"),
                   {sid: (lambda r: seen.append((r.stream_id, r.t, str(r.payload))))
                    for sid in rec.descriptors})
            runs.append(seen)
        assert runs[0] == runs[1]


class TestWindow:
    def make_buffer(self, times):
        buf = StreamBuffer("s")
        for t in times:
            buf.append(t, t)
        return buf

    def test_half_open_window(self):
        buf = self.make_buffer([float(t) for t in range(120)])
        win = buf.window(60.0, 60.0)
        assert [t for t, _ in win] == [float(t) for t in range(60, 120)]

    def test_gap_yields_empty(self):
        buf = self.make_buffer([0.0, 1.0, 50.0])
        assert buf.window(10.0, 20.0) == []

    def test_overlapping_windows_share_samples(self):
        buf = self.make_buffer([float(t) for t in range(120)])
        a = {t for t, _ in buf.window(0.0, 60.0)}
        b = {t for t, _ in buf.window(1.0, 60.0)}
        assert len(a & b) == 59

    def test_adjacent_windows_reconstruct_stream(self):
        times = [i * 0.37 for i in range(100)]
        buf = self.make_buffer(times)
        merged = []
        for start in range(0, 40, 10):
            merged.extend(t for t, _ in buf.window(float(start), 10.0))
        assert merged == [t for t in times if t < 40.0]

    def test_duration_must_be_positive(self):
        with pytest.raises(ValueError):
            self.make_buffer([0.0]).window(0.0, 0.0)

    def test_out_of_order_append_rejected(self):
        buf = self.make_buffer([1.0])
        with pytest.raises(ValueError):
            buf.append(0.5, None)

    def test_latest_at(self):
        buf = self.make_buffer([0.0, 1.0, 2.0])
        assert buf.latest_at(1.5) == (1.0, 1.0)
        assert buf.latest_at(2.0) == (2.0, 2.0)
        assert buf.latest_at(-1.0) is None


class TestClockAndBuffers:
    def test_virtual_clock_advances_only_explicitly(self):
        clock = SessionClock("virtual")
        assert clock.now() == 0.0
        clock.advance(5.0)
        assert clock.now() == 5.0
        with pytest.raises(ValueError):
            clock.advance(4.0)

    def test_real_clock_cannot_be_advanced(self):
        clock = SessionClock("real")
        with pytest.raises(RuntimeError):
            clock.advance(1.0)

    def test_grow_buffer_views(self):
        buf = GrowBuffer(capacity=2)
        for i in range(10):
            buf.push(float(i))
        assert len(buf) == 10
        assert list(buf.view(2, 5)) == [2.0, 3.0, 4.0]
        buf.clear()
        assert len(buf) == 0

    def test_descriptor_rejects_bad_rate(self):
        with pytest.raises(ValueError):
            StreamDescriptor("x", StreamKind.ECG, 0.0)
