"""Parse a MIDI file, derive keystroke metrics, tokenize a melody bar.

Builds a tiny one-bar song in memory, writes it as a Standard MIDI File,
reads it back, and shows the articulation quantities and the 16-token
compressed-pitch representation the chord model consumes.
"""

from pianoduet.corpus import normalize_song
from pianoduet.smf import MidiTrack, NoteEvent, keystroke_metrics, parse_smf, write_smf
from pianoduet.tokens import bar_duration, compress_pitch, pitch_variation, tokenize_bar

tempo = 90.0
t_bar = bar_duration(tempo)
quarter = t_bar / 4

# C4 E4 G4 C5 as quarter notes: one 4/4 bar at 90 BPM
melody = [
    NoteEvent(pitch, 96, i * quarter, (i + 1) * quarter)
    for i, pitch in enumerate([60, 64, 67, 72])
]
track = MidiTrack(melody, 480, [(0, int(round(60e6 / tempo)))])

data = write_smf(track)
print(f"wrote {len(data)} bytes of SMF; header {data[:4]!r}")

parsed = parse_smf(data)
print(f"parsed {len(parsed.events)} notes back:")
for ev in parsed.events:
    info = compress_pitch(ev.pitch)
    print(
        f"  pitch {ev.pitch:3d} -> compressed {info.compressed:2d} "
        f"octave {info.octave}  press {ev.t_press:.3f}s"
    )

print("\nkeystroke metrics (hold, gap, implied tempo):")
for m in keystroke_metrics(parsed.events):
    gap = f"{m.t_gap:.3f}s" if m.t_gap else "  -  "
    beats = f"{m.tempo_beat:.2f} beats/s" if m.tempo_beat else "-"
    print(f"  hold {m.t_hold:.3f}s  gap {gap}  {beats}")

# tempo metas are integer microseconds per quarter, so a freshly parsed
# file sits a hair off the 90 BPM grid: normalize before tokenizing
aligned = normalize_song(parsed, tempo)
bar = tokenize_bar(aligned.events, 0.0, tempo)
print(f"\nbar tokens: {list(bar.tokens)}")
print(f"pitch variation tau = {pitch_variation(bar)}")
