"""Replay a scripted melody through the full engine.

Trains a small classifier on planted data, replays an eight-bar melody
one bar behind the player, and prints the decisions, the strike schedule
and the cooperation report.  Writes the merged two-voice MIDI next to the
script.
"""

from pianoduet.accompany import CHORD_TONES
from pianoduet.model import TrainConfig, train
from pianoduet.session import run_replay
from pianoduet.smf import MidiTrack, NoteEvent, write_smf
from pianoduet.sync_metrics import build_report
from pianoduet.synthetic import make_samples
from pianoduet.tokens import bar_duration

model, _ = train(make_samples(1200, seed=1), TrainConfig(seed=1))

progression = ["C", "C", "Dm", "Em", "Dm", "C", "Dm", "C"]
t_bar = bar_duration(90.0)
events = []
for i, chord in enumerate(progression):
    tones = CHORD_TONES[chord]
    for k, pc in enumerate((tones[0], tones[1], tones[2], tones[0])):
        start = i * t_bar + k * t_bar / 4
        events.append(NoteEvent(60 + pc, 92, start, start + t_bar / 4))
melody = MidiTrack(sorted(events, key=lambda e: (e.t_press, e.pitch)), 480,
                   [(0, int(round(60e6 / 90.0)))])

result = run_replay(melody, model)

print("bar  chord  ck  zeta   v(mm/s)")
for d in result.decisions:
    zeta = f"{d.zeta}" if d.zeta is not None else "-"
    v = f"{d.v:6.1f}" if d.v is not None else "     -"
    print(f"{d.bar:>3}  {d.chord:<5} {d.ck:>2}  {zeta:<5} {v}")

print(f"\nmelody notes: {len(result.melody)}, chord notes: {len(result.accompaniment)}")
print(f"faults: {[f['kind'] for f in result.faults] or 'none'}")

human, robot = result.matched_beats()
print("\n" + build_report(human, robot).format())

out = "duet_demo.mid"
with open(out, "wb") as fh:
    fh.write(write_smf(result.merged))
print(f"\nmerged two-voice MIDI -> {out}")
