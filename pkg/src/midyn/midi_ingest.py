"""Standard MIDI File ingestion into fixed-length binary bar vectors.

A piece is read in three stages:

1. ``parse_midi`` decodes an SMF byte stream (format 0 or 1) into a flat,
   onset-sorted list of :class:`NoteEvent` in absolute ticks, merging all
   tracks onto one timeline.
2. ``to_state_matrix`` rasterizes the events onto a sixteenth-note grid.
   Each step row holds, per pitch slot, a (playing, articulated) flag pair:
   *playing* marks every step during which the note sounds, *articulated*
   only the step containing its onset.  Overlapping same-pitch notes merge
   into one sustained region articulated once, at the first onset.
3. ``segment_bars`` slices the grid into bars of a fixed number of steps
   (default 16), zero-padding the trailing partial bar.

Timing is handled entirely in ticks: tempo changes are irrelevant to the
grid, and a "bar" is always ``steps_per_bar`` sixteenth steps regardless of
any time-signature events in the file.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import MidiParseError, UnsupportedMidiError

log = logging.getLogger(__name__)

DEFAULT_PITCH_LO = 24
DEFAULT_PITCH_HI = 102
DEFAULT_STEPS_PER_QUARTER = 4
DEFAULT_STEPS_PER_BAR = 16


@dataclass(frozen=True)
class NoteEvent:
    """One note with absolute onset and duration in MIDI ticks."""

    onset_tick: int
    duration_ticks: int
    pitch: int
    velocity: int
    channel: int

    def __post_init__(self):
        if self.duration_ticks <= 0:
            raise ValueError(f"duration_ticks must be > 0, got {self.duration_ticks}")
        if not 0 <= self.pitch < 128:
            raise ValueError(f"pitch must be in [0, 128), got {self.pitch}")


@dataclass
class NoteStateMatrix:
    """Step grid of (playing, articulated) flag pairs.

    ``values`` has shape (steps, 2 * n_pitches) with pitch slot ``p``
    occupying columns ``2p`` (playing) and ``2p + 1`` (articulated).
    """

    values: np.ndarray
    pitch_lo: int
    pitch_hi: int
    dropped_notes: int = 0

    @property
    def n_steps(self) -> int:
        return self.values.shape[0]

    @property
    def n_pitches(self) -> int:
        return self.pitch_hi - self.pitch_lo


@dataclass
class BarVector:
    """Flat binary vector for one bar; length steps_per_bar * 2 * n_pitches."""

    values: np.ndarray
    bar_index: int

    def to_json_array(self) -> list[int]:
        return [int(v) for v in self.values]


# --------------------------------------------------------------------------
# SMF byte-level parsing
# --------------------------------------------------------------------------


class _Reader:
    """Cursor over SMF bytes; every read error names the byte offset."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise MidiParseError(
                f"unexpected end of file, needed {n} bytes", offset=self.pos
            )
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return int.from_bytes(self.take(2), "big")

    def u32(self) -> int:
        return int.from_bytes(self.take(4), "big")

    def varlen(self) -> int:
        value = 0
        for _ in range(4):
            b = self.u8()
            value = (value << 7) | (b & 0x7F)
            if not b & 0x80:
                return value
        raise MidiParseError("variable-length quantity longer than 4 bytes",
                             offset=self.pos)


def parse_midi(data: bytes) -> tuple[list[NoteEvent], int]:
    """Decode an SMF byte string into (sorted note events, ticks per quarter).

    Supports format 0 and 1; format 2 and SMPTE time divisions are rejected.
    A note-on with velocity 0 closes the matching note, per the usual SMF
    convention.  Notes still open when their track ends are closed at the
    track's final tick.
    """
    r = _Reader(data)
    if r.take(4) != b"MThd":
        raise MidiParseError("missing MThd header chunk", offset=0)
    header_len = r.u32()
    if header_len < 6:
        raise MidiParseError(f"header chunk length {header_len} < 6", offset=4)
    fmt = r.u16()
    n_tracks = r.u16()
    division = r.u16()
    r.take(header_len - 6)
    if fmt not in (0, 1):
        raise UnsupportedMidiError(f"SMF format {fmt} is not supported", offset=8)
    if division & 0x8000:
        raise UnsupportedMidiError("SMPTE time division is not supported", offset=12)
    if division == 0:
        raise MidiParseError("time division of 0 ticks per quarter", offset=12)

    events: list[NoteEvent] = []
    for _ in range(n_tracks):
        events.extend(_parse_track(r))
    events.sort(key=lambda e: (e.onset_tick, e.pitch, e.channel))
    return events, division


def _parse_track(r: _Reader) -> list[NoteEvent]:
    if r.take(4) != b"MTrk":
        raise MidiParseError("missing MTrk track chunk", offset=r.pos - 4)
    length = r.u32()
    end = r.pos + length
    if end > len(r.data):
        raise MidiParseError(f"track length {length} overruns file", offset=r.pos - 4)

    tick = 0
    running_status = None
    # (channel, pitch) -> FIFO of (onset_tick, velocity) for open notes
    open_notes: dict[tuple[int, int], list[tuple[int, int]]] = {}
    events: list[NoteEvent] = []

    def close(channel, pitch, off_tick):
        stack = open_notes.get((channel, pitch))
        if not stack:
            return  # stray note-off, ignored
        onset, velocity = stack.pop(0)
        if off_tick > onset:
            events.append(NoteEvent(onset, off_tick - onset, pitch, velocity, channel))
        else:
            log.debug("dropping zero-length note pitch=%d at tick %d", pitch, onset)

    while r.pos < end:
        tick += r.varlen()
        status = r.u8()
        if status < 0x80:
            if running_status is None:
                raise MidiParseError(
                    f"data byte 0x{status:02x} without running status",
                    offset=r.pos - 1,
                )
            r.pos -= 1
            status = running_status
        if status == 0xFF:
            meta_type = r.u8()
            meta = r.take(r.varlen())
            running_status = None
            if meta_type == 0x2F:
                break
            del meta
        elif status in (0xF0, 0xF7):
            r.take(r.varlen())
            running_status = None
        elif status >= 0xF0:
            raise MidiParseError(f"unexpected status byte 0x{status:02x}",
                                 offset=r.pos - 1)
        else:
            running_status = status
            kind = status & 0xF0
            channel = status & 0x0F
            if kind in (0xC0, 0xD0):
                r.take(1)
                continue
            d1 = r.u8()
            d2 = r.u8()
            if kind == 0x90 and d2 > 0:
                open_notes.setdefault((channel, d1), []).append((tick, d2))
            elif kind == 0x80 or (kind == 0x90 and d2 == 0):
                close(channel, d1, tick)

    r.pos = end
    for (channel, pitch), stack in list(open_notes.items()):
        for _ in range(len(stack)):
            close(channel, pitch, tick)
    return events


# --------------------------------------------------------------------------
# Rasterization and bar segmentation
# --------------------------------------------------------------------------


def to_state_matrix(
    events: list[NoteEvent],
    ticks_per_quarter: int,
    steps_per_quarter: int = DEFAULT_STEPS_PER_QUARTER,
    pitch_lo: int = DEFAULT_PITCH_LO,
    pitch_hi: int = DEFAULT_PITCH_HI,
    total_ticks: int | None = None,
) -> NoteStateMatrix:
    """Rasterize note events onto the step grid.

    A pitch is *playing* at step t when its sounding interval intersects the
    step window [t, t+1); it is *articulated* only at the step containing the
    onset.  Notes outside [pitch_lo, pitch_hi) are dropped and counted.
    Overlapping same-pitch intervals merge: one region, one articulation.
    """
    if pitch_lo >= pitch_hi:
        raise ValueError(f"pitch_lo {pitch_lo} must be < pitch_hi {pitch_hi}")
    if ticks_per_quarter <= 0 or steps_per_quarter <= 0:
        raise ValueError("ticks_per_quarter and steps_per_quarter must be positive")

    n_pitches = pitch_hi - pitch_lo
    if total_ticks is None:
        total_ticks = max((e.onset_tick + e.duration_ticks for e in events), default=0)
    # step index of tick x is floor(x * spq / tpq); exact in integer math
    n_steps = -(-total_ticks * steps_per_quarter // ticks_per_quarter)
    matrix = np.zeros((n_steps, 2 * n_pitches), dtype=np.uint8)

    dropped = 0
    # per-pitch interval merging before rasterizing
    by_pitch: dict[int, list[tuple[int, int]]] = {}
    for e in events:
        if not pitch_lo <= e.pitch < pitch_hi:
            dropped += 1
            continue
        by_pitch.setdefault(e.pitch, []).append(
            (e.onset_tick, e.onset_tick + e.duration_ticks)
        )
    if dropped:
        log.warning("dropped %d notes outside pitch range [%d, %d)",
                    dropped, pitch_lo, pitch_hi)

    def tick_to_step(tick: int) -> int:
        return tick * steps_per_quarter // ticks_per_quarter

    for pitch, intervals in by_pitch.items():
        intervals.sort()
        slot = pitch - pitch_lo
        region_start, region_end = intervals[0]
        for start, stop in intervals[1:]:
            if start < region_end:  # overlap: extend region, no new articulation
                region_end = max(region_end, stop)
            else:
                _paint(matrix, slot, region_start, region_end, tick_to_step)
                region_start, region_end = start, stop
        _paint(matrix, slot, region_start, region_end, tick_to_step)

    return NoteStateMatrix(matrix, pitch_lo, pitch_hi, dropped_notes=dropped)


def _paint(matrix, slot, start_tick, end_tick, tick_to_step):
    # clip to the grid: an explicit total_ticks may cut events short
    n_steps = matrix.shape[0]
    first = tick_to_step(start_tick)
    last = min(tick_to_step(end_tick - 1), n_steps - 1)
    if first >= n_steps:
        return
    matrix[first : last + 1, 2 * slot] = 1
    matrix[first, 2 * slot + 1] = 1


def segment_bars(
    matrix: NoteStateMatrix, steps_per_bar: int = DEFAULT_STEPS_PER_BAR
) -> list[BarVector]:
    """Slice the grid into flat bar vectors, zero-padding the last bar."""
    if steps_per_bar < 1:
        raise ValueError(f"steps_per_bar must be >= 1, got {steps_per_bar}")
    rows = matrix.values
    if rows.shape[0] == 0:
        return []
    n_bars = -(-rows.shape[0] // steps_per_bar)
    padded = np.zeros((n_bars * steps_per_bar, rows.shape[1]), dtype=rows.dtype)
    padded[: rows.shape[0]] = rows
    return [
        BarVector(padded[i * steps_per_bar : (i + 1) * steps_per_bar].reshape(-1), i)
        for i in range(n_bars)
    ]


def bars_from_midi_bytes(data: bytes, **kwargs) -> list[BarVector]:
    """Convenience path: SMF bytes straight to bar vectors."""
    steps_per_bar = kwargs.pop("steps_per_bar", DEFAULT_STEPS_PER_BAR)
    events, tpq = parse_midi(data)
    matrix = to_state_matrix(events, tpq, **kwargs)
    return segment_bars(matrix, steps_per_bar=steps_per_bar)


def bars_to_json_arrays(bars: list[BarVector]) -> list[list[int]]:
    """Serialize a bar stream as JSON-ready arrays of 0/1 integers."""
    return [bar.to_json_array() for bar in bars]
