"""Test-only Standard MIDI File writer and a deterministic piano corpus.

The library itself never writes MIDI, so tests fabricate their own bytes.
Notes are (onset_tick, duration_ticks, pitch, velocity) tuples; the writer
emits format 0 or 1 with one meta end-of-track per track.

The corpus generators produce small etude-like pieces (scales, chorale
chords, arpeggios, a two-voice imitation, a song form) plus one strongly
sectional held-out piece whose body is a four-bar pattern cycled with
occasional transposition. Everything is deterministic.
"""

from __future__ import annotations

import numpy as np

DIVISION = 480
SIXTEENTH = DIVISION // 4
BAR_TICKS = 16 * SIXTEENTH


def vlq(value: int) -> bytes:
    if value < 0:
        raise ValueError("negative delta")
    out = [value & 0x7F]
    value >>= 7
    while value:
        out.append(0x80 | (value & 0x7F))
        value >>= 7
    return bytes(reversed(out))


def track_bytes(notes, channel: int = 0, extra_events=()) -> bytes:
    """notes: iterable of (onset_tick, duration_ticks, pitch, velocity)."""
    events = []  # (tick, order, payload)
    for onset, dur, pitch, vel in notes:
        events.append((onset, 1, bytes([0x90 | channel, pitch, vel])))
        events.append((onset + dur, 0, bytes([0x80 | channel, pitch, 0x40])))
    events.extend(extra_events)
    events.sort(key=lambda e: (e[0], e[1]))
    chunks = []
    now = 0
    for tick, _, payload in events:
        chunks.append(vlq(tick - now) + payload)
        now = tick
    chunks.append(vlq(0) + bytes([0xFF, 0x2F, 0x00]))
    body = b"".join(chunks)
    return b"MTrk" + len(body).to_bytes(4, "big") + body


def smf(tracks: list[bytes], fmt: int = 0, division: int = DIVISION) -> bytes:
    header = (
        b"MThd"
        + (6).to_bytes(4, "big")
        + fmt.to_bytes(2, "big")
        + len(tracks).to_bytes(2, "big")
        + division.to_bytes(2, "big")
    )
    return header + b"".join(tracks)


def notes_to_smf(notes, fmt: int = 0) -> bytes:
    return smf([track_bytes(notes)], fmt=fmt)


def steps(seq):
    """(step, dur_steps, pitch, vel) -> tick-based note tuples."""
    return [(s * SIXTEENTH, d * SIXTEENTH, p, v) for s, d, p, v in seq]


# --------------------------------------------------------------------------
# corpus pieces
# --------------------------------------------------------------------------

MAJOR = [0, 2, 4, 5, 7, 9, 11]


def _degree(root: int, deg: int) -> int:
    octave, idx = divmod(deg, 7)
    return root + 12 * octave + MAJOR[idx]


def piece_scales() -> list:
    """Eighth-note scale runs over a held bass, 48 bars."""
    seq = []
    roots = [48, 50, 53, 55, 48, 53, 55, 48, 50, 55, 53, 48]
    for section, root in enumerate(roots):
        base = section * 4 * 16
        for bar in range(4):
            start = base + bar * 16
            seq.append((start, 16, root - 12, 70))
            direction = 1 if bar % 2 == 0 else -1
            for i in range(8):
                deg = i if direction > 0 else 7 - i
                seq.append((start + 2 * i, 2, _degree(root, deg + bar), 80))
    return steps(seq)


def piece_chords() -> list:
    """Quarter-note chorale triads, 52 bars."""
    seq = []
    progression = [0, 3, 4, 0, 5, 3, 4, 0, 0, 4, 5, 3, 0]
    for rep in range(4):
        for b, deg in enumerate(progression):
            start = (rep * len(progression) + b) * 16
            root = 48 + MAJOR[deg % 7]
            for beat in range(4):
                t = start + beat * 4
                for interval in (0, 4 if deg in (0, 3, 4) else 3, 7):
                    seq.append((t, 4, root + interval, 76))
                seq.append((t, 4, root + 12 + (beat % 2) * 4, 84))
    return steps(seq)


def piece_arpeggios() -> list:
    """Sixteenth-note broken chords with half-note bass, 48 bars."""
    seq = []
    chords = [(48, 52, 55), (45, 48, 52), (50, 53, 57), (43, 47, 50),
              (48, 52, 55), (53, 57, 60), (50, 53, 57), (48, 52, 55)]
    for rep in range(6):
        for b, chord in enumerate(chords):
            start = (rep * len(chords) + b) * 16
            seq.append((start, 8, chord[0] - 12, 68))
            seq.append((start + 8, 8, chord[0] - 5, 68))
            pattern = [0, 1, 2, 1, 0, 1, 2, 1, 0, 2, 1, 2, 0, 1, 2, 1]
            for i, idx in enumerate(pattern):
                seq.append((start + i, 1, chord[idx] + 12, 78))
    return steps(seq)


def piece_invention() -> list:
    """Two voices trading a four-bar subject, 48 bars."""
    subject = [(0, 2, 0), (2, 2, 2), (4, 2, 4), (6, 2, 2), (8, 4, 5),
               (12, 4, 4), (16, 2, 2), (18, 2, 4), (20, 4, 0), (24, 8, 7),
               (32, 2, 7), (34, 2, 5), (36, 2, 4), (38, 2, 2), (40, 8, 0),
               (48, 16, 0)]
    seq = []
    entries = [(0, 60, 0), (4, 48, 0), (8, 60, 7), (12, 48, 7),
               (16, 60, 3), (20, 48, 3), (24, 60, 0), (28, 48, 0),
               (32, 60, 4), (36, 48, 4), (40, 60, 0), (44, 48, 0)]
    for bar, base, transpose in entries:
        start = bar * 16
        for s, d, deg in subject:
            seq.append((start + s, d, _degree(base, deg + transpose), 82))
    return steps(seq)


def piece_song() -> list:
    """AABA song form with an alberti bass, 56 bars."""
    a_phrase = [(0, 4, 4), (4, 2, 5), (6, 2, 4), (8, 4, 2), (12, 4, 0),
                (16, 4, 2), (20, 2, 4), (22, 2, 5), (24, 8, 4),
                (32, 4, 4), (36, 2, 5), (38, 2, 7), (40, 4, 5), (44, 4, 4),
                (48, 4, 2), (52, 2, 1), (54, 2, 2), (56, 8, 0),
                (64, 4, 0), (68, 4, 2), (72, 4, 4), (76, 4, 5),
                (80, 8, 7), (88, 4, 5), (92, 4, 4),
                (96, 4, 2), (100, 4, 4), (104, 4, 2), (108, 4, 1),
                (112, 16, 0)]
    b_phrase = [(0, 4, 7), (4, 4, 9), (8, 4, 7), (12, 4, 5),
                (16, 4, 4), (20, 4, 5), (24, 8, 7),
                (32, 4, 9), (36, 4, 7), (40, 4, 5), (44, 4, 4),
                (48, 4, 2), (52, 4, 4), (56, 8, 0),
                (64, 4, 7), (68, 4, 5), (72, 4, 4), (76, 4, 2),
                (80, 8, 0), (88, 4, 2), (92, 4, 4),
                (96, 4, 5), (100, 4, 4), (104, 4, 2), (108, 4, 1),
                (112, 16, 0)]
    form = [(0, a_phrase), (8, a_phrase), (16, b_phrase), (24, a_phrase),
            (32, a_phrase), (40, b_phrase), (48, a_phrase)]
    seq = []
    for bar, phrase in form:
        start = bar * 16
        for s, d, deg in phrase:
            seq.append((start + s, d, _degree(67, deg), 86))
        for local_bar in range(8):
            b0 = start + local_bar * 16
            for i, off in enumerate([0, 7, 4, 7] * 2):
                seq.append((b0 + i * 2, 2, _degree(43, off), 66))
    return steps(seq)


def heldout_piece() -> list:
    """Sectional piece: short free intro, then a four-bar motif cycled with
    sparse transpositions, 142 bars. The body reads as one long repetition
    once the encoding is coarse enough.
    """
    seq = []
    intro = [(0, 4, 60), (4, 4, 64), (8, 4, 67), (12, 4, 72),
             (16, 2, 71), (18, 2, 69), (20, 4, 67), (24, 8, 64),
             (32, 4, 62), (36, 4, 65), (40, 8, 69), (48, 16, 67),
             (64, 2, 60), (66, 2, 62), (68, 2, 64), (70, 2, 65),
             (72, 2, 67), (74, 2, 69), (76, 2, 71), (78, 2, 72),
             (80, 16, 74)]
    for s, d, p in intro:
        seq.append((s, d, p, 84))
    intro_bars = 6

    motif = []
    for i, idx in enumerate([0, 1, 2, 1] * 4):
        motif.append((i, 1, (48, 52, 55)[idx] + 12, 78))
    for i, idx in enumerate([2, 1, 0, 1] * 4):
        motif.append((16 + i, 1, (48, 52, 55)[idx] + 12, 78))
    motif += [(32, 4, 67, 82), (36, 4, 64, 82), (40, 8, 60, 82),
              (48, 8, 55, 82), (56, 8, 60, 82)]
    motif += [(0, 16, 36, 64), (16, 16, 43, 64), (32, 16, 36, 64),
              (48, 16, 43, 64)]

    transpositions = [0, 0, 0, 5, 0, 0, 7, 0] * 4 + [0, 0]
    for rep, shift in enumerate(transpositions):
        base = (intro_bars + rep * 4) * 16
        for s, d, p, v in motif:
            seq.append((base + s, d, p + shift, v))
    return steps(seq)


TRAIN_PIECES = {
    "scales.mid": piece_scales,
    "chords.mid": piece_chords,
    "arpeggios.mid": piece_arpeggios,
    "invention.mid": piece_invention,
    "song.mid": piece_song,
}


def write_corpus(train_dir, heldout_path) -> dict:
    """Write the five training files plus the held-out piece; return bar counts."""
    bar_counts = {}
    for name, maker in TRAIN_PIECES.items():
        notes = maker()
        (train_dir / name).write_bytes(notes_to_smf(notes))
        end = max(t + d for t, d, _, _ in notes)
        bar_counts[name] = -(-end // BAR_TICKS)
    notes = heldout_piece()
    heldout_path.write_bytes(notes_to_smf(notes))
    end = max(t + d for t, d, _, _ in notes)
    bar_counts["heldout.mid"] = -(-end // BAR_TICKS)
    return bar_counts


if __name__ == "__main__":
    for name, maker in TRAIN_PIECES.items():
        notes = maker()
        end = max(t + d for t, d, _, _ in notes)
        print(name, -(-end // BAR_TICKS), "bars")
    notes = heldout_piece()
    end = max(t + d for t, d, _, _ in notes)
    print("heldout.mid", -(-end // BAR_TICKS), "bars")
