"""Standard MIDI File (format 0/1) reading and writing, plus keystroke metrics.

The in-memory model is deliberately small: a flat, time-sorted list of
:class:`NoteEvent` with press/release times in seconds, the original
ticks-per-quarter resolution and the tempo map.  Tick arithmetic is done in
integers; conversion to seconds happens once, driven by the tempo map
(meta event 0x51).  SysEx and all meta events other than tempo and
end-of-track are skipped.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

PIANO_PITCH_MIN = 21
PIANO_PITCH_MAX = 108
DEFAULT_TEMPO_USPQ = 500_000  # microseconds per quarter note (120 BPM)
VLQ_MAX = 0x0FFFFFFF


class MidiParseError(ValueError):
    """Raised for malformed, truncated or unsupported SMF input."""


class MidiWriteError(ValueError):
    """Raised when a MidiTrack cannot be serialized at the chosen resolution."""


@dataclass(frozen=True)
class NoteEvent:
    """A single resolved keystroke: one note-on paired with its note-off."""

    pitch: int
    velocity: int
    t_press: float
    t_release: float
    channel: int = 0

    def __post_init__(self):
        if not PIANO_PITCH_MIN <= self.pitch <= PIANO_PITCH_MAX:
            raise ValueError(f"pitch {self.pitch} outside piano range 21..108")
        if not 0 <= self.velocity <= 127:
            raise ValueError(f"velocity {self.velocity} outside 0..127")
        if not self.t_release > self.t_press:
            raise ValueError(
                f"t_release ({self.t_release}) must exceed t_press ({self.t_press})"
            )


@dataclass(frozen=True)
class KeystrokeMetrics:
    """Articulation/dynamics quantities derived from one keystroke.

    t_gap (press-to-next-press interval) and the implied tempo_beat in
    beats per second are absent for the final note of a sequence.
    """

    v_press: int
    t_hold: float
    t_gap: float | None = None
    tempo_beat: float | None = None


@dataclass
class MidiTrack:
    events: list[NoteEvent] = field(default_factory=list)
    ticks_per_quarter: int = 480
    tempo_map: list[tuple[int, int]] = field(default_factory=list)

    def sorted(self) -> "MidiTrack":
        """Copy with events ordered by press time, ties by ascending pitch."""
        ordered = sorted(self.events, key=lambda e: (e.t_press, e.pitch))
        return MidiTrack(ordered, self.ticks_per_quarter, list(self.tempo_map))


class _Reader:
    """Bounds-checked byte cursor; exhaustion raises MidiParseError."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise MidiParseError(
                f"truncated chunk: wanted {n} bytes at offset {self.pos}"
            )
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return self.take(1)[0]

    def vlq(self) -> int:
        value = 0
        for _ in range(4):
            byte = self.u8()
            value = (value << 7) | (byte & 0x7F)
            if not byte & 0x80:
                return value
        raise MidiParseError("variable-length quantity longer than 4 bytes")

    @property
    def exhausted(self) -> bool:
        return self.pos >= len(self.data)


def _tick_to_seconds(tick: int, tempo_map: list[tuple[int, int]], tpq: int) -> float:
    """Piecewise-linear tick-to-seconds conversion under the tempo map."""
    seconds = 0.0
    prev_tick = 0
    uspq = DEFAULT_TEMPO_USPQ
    for change_tick, change_uspq in tempo_map:
        if change_tick >= tick:
            break
        seconds += (change_tick - prev_tick) * uspq / (1e6 * tpq)
        prev_tick = change_tick
        uspq = change_uspq
    seconds += (tick - prev_tick) * uspq / (1e6 * tpq)
    return seconds


def _seconds_to_tick(t: float, tempo_map: list[tuple[int, int]], tpq: int) -> float:
    """Inverse of _tick_to_seconds; returns an exact (float) tick position."""
    remaining = t
    prev_tick = 0
    uspq = DEFAULT_TEMPO_USPQ
    for change_tick, change_uspq in tempo_map:
        span = (change_tick - prev_tick) * uspq / (1e6 * tpq)
        if span > remaining:
            break
        remaining -= span
        prev_tick = change_tick
        uspq = change_uspq
    return prev_tick + remaining * 1e6 * tpq / uspq


def parse_smf(data: bytes) -> MidiTrack:
    """Parse SMF format 0/1 bytes into a MidiTrack.

    Note-on with velocity 0 counts as note-off.  Overlapping notes of the
    same pitch and channel are closed at the later note-on (last-on wins).
    Notes outside the 88-key piano range are dropped.  An unmatched note-on
    at end of track is an error reporting pitch and tick.
    """
    r = _Reader(data)
    if r.take(4) != b"MThd":
        raise MidiParseError("malformed header: missing MThd")
    header_len = struct.unpack(">I", r.take(4))[0]
    if header_len < 6:
        raise MidiParseError(f"malformed header: length {header_len} < 6")
    fmt, ntracks, division = struct.unpack(">HHH", r.take(6))
    r.take(header_len - 6)
    if fmt == 2:
        raise MidiParseError("unsupported SMF type 2")
    if fmt not in (0, 1):
        raise MidiParseError(f"unsupported SMF type {fmt}")
    if division & 0x8000:
        raise MidiParseError("SMPTE time division not supported")
    if division == 0:
        raise MidiParseError("malformed header: zero ticks per quarter")

    tempo_map: list[tuple[int, int]] = []
    raw_notes: list[tuple[int, int, int, int, int]] = []  # on, off, pitch, vel, ch

    for _ in range(ntracks):
        if r.take(4) != b"MTrk":
            raise MidiParseError("malformed track: missing MTrk")
        track_len = struct.unpack(">I", r.take(4))[0]
        tr = _Reader(r.take(track_len))
        tick = 0
        running = None
        open_notes: dict[tuple[int, int], tuple[int, int]] = {}  # key -> (tick, vel)

        def close_note(pitch: int, channel: int, off_tick: int):
            opened = open_notes.pop((pitch, channel), None)
            if opened is None:
                return  # stray note-off: tolerated
            on_tick, vel = opened
            if PIANO_PITCH_MIN <= pitch <= PIANO_PITCH_MAX:
                raw_notes.append((on_tick, off_tick, pitch, vel, channel))

        while not tr.exhausted:
            tick += tr.vlq()
            status = tr.u8()
            if status < 0x80:
                if running is None:
                    raise MidiParseError(f"data byte {status:#x} with no running status")
                tr.pos -= 1
                status = running
            if status == 0xFF:
                meta_type = tr.u8()
                meta_len = tr.vlq()
                meta = tr.take(meta_len)
                if meta_type == 0x51 and meta_len == 3:
                    tempo_map.append((tick, int.from_bytes(meta, "big")))
                elif meta_type == 0x2F:
                    break
                continue
            if status in (0xF0, 0xF7):
                tr.take(tr.vlq())
                continue
            if status >= 0xF0:
                raise MidiParseError(f"unexpected status byte {status:#x}")
            running = status
            kind, channel = status >> 4, status & 0x0F
            if kind == 0x9:
                pitch, vel = tr.u8(), tr.u8()
                if vel == 0:
                    close_note(pitch, channel, tick)
                else:
                    if (pitch, channel) in open_notes:
                        close_note(pitch, channel, tick)
                    open_notes[(pitch, channel)] = (tick, vel)
            elif kind == 0x8:
                pitch, _ = tr.u8(), tr.u8()
                close_note(pitch, channel, tick)
            elif kind in (0xA, 0xB, 0xE):
                tr.take(2)
            elif kind in (0xC, 0xD):
                tr.take(1)
            else:
                raise MidiParseError(f"unexpected status byte {status:#x}")

        if open_notes:
            (pitch, _), (on_tick, _) = next(iter(open_notes.items()))
            raise MidiParseError(
                f"unmatched note-on: pitch {pitch} at tick {on_tick}"
            )

    tempo_map.sort(key=lambda tc: tc[0])
    events = []
    for on_tick, off_tick, pitch, vel, channel in raw_notes:
        if off_tick <= on_tick:
            off_tick = on_tick + 1  # zero-length note: give it one tick
        events.append(
            NoteEvent(
                pitch=pitch,
                velocity=vel,
                t_press=_tick_to_seconds(on_tick, tempo_map, division),
                t_release=_tick_to_seconds(off_tick, tempo_map, division),
                channel=channel,
            )
        )
    return MidiTrack(events, division, tempo_map).sorted()


def _vlq_bytes(value: int) -> bytes:
    if value < 0 or value > VLQ_MAX:
        raise MidiWriteError(f"delta time {value} not representable as a VLQ")
    out = [value & 0x7F]
    value >>= 7
    while value:
        out.append((value & 0x7F) | 0x80)
        value >>= 7
    return bytes(reversed(out))


def write_smf(track: MidiTrack, strict: bool = False) -> bytes:
    """Serialize a MidiTrack as a single-track (format 0) SMF.

    Times are quantized to the track's tick grid under its tempo map
    (default tempo if the map is empty).  With strict=True, any event time
    more than 1 µs off the grid is rejected with a hint to raise
    ticks_per_quarter.
    """
    tpq = track.ticks_per_quarter
    if tpq <= 0 or tpq > 0x7FFF:
        raise MidiWriteError(f"ticks_per_quarter {tpq} outside 1..32767")
    tempo_map = sorted(track.tempo_map) or [(0, DEFAULT_TEMPO_USPQ)]

    def to_tick(t: float) -> int:
        exact = _seconds_to_tick(t, tempo_map, tpq)
        tick = round(exact)
        if strict and abs(_tick_to_seconds(tick, tempo_map, tpq) - t) > 1e-6:
            raise MidiWriteError(
                f"time {t} s not representable at {tpq} ticks/quarter; "
                "use a higher ticks_per_quarter"
            )
        return tick

    # (tick, order, payload): note-offs sort before note-ons at equal ticks
    timed: list[tuple[int, int, bytes]] = []
    for tick, uspq in tempo_map:
        timed.append((tick, 0, bytes([0xFF, 0x51, 0x03]) + uspq.to_bytes(3, "big")))
    for ev in track.events:
        on, off = to_tick(ev.t_press), to_tick(ev.t_release)
        if off <= on:
            off = on + 1
        timed.append((on, 2, bytes([0x90 | ev.channel, ev.pitch, ev.velocity])))
        timed.append((off, 1, bytes([0x80 | ev.channel, ev.pitch, 0])))
    timed.sort(key=lambda item: (item[0], item[1]))

    body = bytearray()
    prev_tick = 0
    for tick, _, payload in timed:
        body += _vlq_bytes(tick - prev_tick)
        body += payload
        prev_tick = tick
    body += b"\x00\xff\x2f\x00"

    header = b"MThd" + struct.pack(">IHHH", 6, 0, 1, tpq)
    return header + b"MTrk" + struct.pack(">I", len(body)) + bytes(body)


def keystroke_metrics(events: list[NoteEvent]) -> list[KeystrokeMetrics]:
    """Per-note hold times and press-to-press gaps for a sorted event list.

    The gap to the next press defines the instantaneous tempo in beats per
    second (1.5 beats/s corresponds to 90 BPM).
    """
    out = []
    for i, ev in enumerate(events):
        t_gap = None
        if i + 1 < len(events):
            t_gap = events[i + 1].t_press - ev.t_press
        out.append(
            KeystrokeMetrics(
                v_press=ev.velocity,
                t_hold=ev.t_release - ev.t_press,
                t_gap=t_gap,
                tempo_beat=(1.0 / t_gap) if t_gap else None,
            )
        )
    return out
