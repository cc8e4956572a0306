"""Synthetic training corpora with planted, fully recoverable structure.

Each generated song carries left-hand triads on exact bar starts and a
legato right-hand melody built from chord tones, with the bar's first
quarter always on the chord root.  The chord is therefore a deterministic
function of the melody bar (its first token names the root), every triad
is extractable, and nothing else in the song looks like a triad - so
extraction recall and precision are checkable against the planted truth.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from pianoduet.accompany import CHORD_LABELS, CHORD_TONES, voice_chord
from pianoduet.smf import MidiTrack, NoteEvent, write_smf
from pianoduet.tokens import TOKENS_PER_BAR, bar_duration

MELODY_OCTAVE_BASE = 60  # right hand lives in C5's octave
CHORD_OCTAVE_BASE = 36  # left hand stays clear of the melody register
DEFAULT_LABELS = tuple(c for c in CHORD_LABELS if c != "Bdim")  # pop avoids Bdim


@dataclass(frozen=True)
class PlantedBar:
    bar_index: int
    chord_label: str
    tokens: tuple[int, ...]


def _melody_slots(rng: np.random.Generator, label: str) -> list[tuple[int, int]]:
    """(pitch, sixteenth-slot length) covering one bar, root on the downbeat."""
    tones = CHORD_TONES[label]
    slots: list[tuple[int, int]] = []
    for quarter in range(4):
        if quarter == 0:
            choices = [tones[0]]  # the rule: bars open on the root
        else:
            choices = list(tones)
        if quarter > 0 and rng.random() < 0.5:
            lengths = (2, 2)  # two eighths
        else:
            lengths = (4,)
        for length in lengths:
            pc = choices[rng.integers(0, len(choices))]
            slots.append((MELODY_OCTAVE_BASE + pc, length))
    return slots


def planted_tokens(slots: list[tuple[int, int]]) -> tuple[int, ...]:
    tokens = []
    for pitch, length in slots:
        tokens.extend([pitch % 12 + 1] * length)
    assert len(tokens) == TOKENS_PER_BAR
    return tuple(tokens)


def make_song(
    rng: np.random.Generator,
    bars: int,
    tempo_bpm: float = 120.0,
    labels: tuple[str, ...] = DEFAULT_LABELS,
) -> tuple[MidiTrack, list[PlantedBar]]:
    """One two-hand song plus its planted ground truth.

    The default tempo keeps microseconds-per-quarter integral (120 BPM ->
    500000 us), so writing, parsing and renormalizing to 90 BPM leave the
    planted note boundaries exactly on the tokenizer's sampling grid.
    """
    t_bar = bar_duration(tempo_bpm)
    step = t_bar / TOKENS_PER_BAR
    events: list[NoteEvent] = []
    truth: list[PlantedBar] = []
    for bar in range(bars):
        label = labels[rng.integers(0, len(labels))]
        bar_start = bar * t_bar
        for pitch in voice_chord(label, CHORD_OCTAVE_BASE).pitches:
            events.append(NoteEvent(pitch, 80, bar_start, bar_start + 0.9 * t_bar))
        slots = _melody_slots(rng, label)
        t = bar_start
        for pitch, length in slots:
            events.append(NoteEvent(pitch, 96, t, t + length * step))
            t += length * step
        truth.append(PlantedBar(bar, label, planted_tokens(slots)))
    uspq = int(round(60e6 / tempo_bpm))
    return MidiTrack(events, 480, [(0, uspq)]).sorted(), truth


def make_corpus(
    directory,
    num_songs: int = 25,
    bars_per_song: int = 12,
    seed: int = 0,
    tempo_bpm: float = 120.0,
    labels: tuple[str, ...] = DEFAULT_LABELS,
) -> dict[str, list[PlantedBar]]:
    """Write .mid songs into a directory; returns planted truth per song stem."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    truth = {}
    for i in range(num_songs):
        track, planted = make_song(rng, bars_per_song, tempo_bpm, labels)
        stem = f"song_{i:03d}"
        (directory / f"{stem}.mid").write_bytes(write_smf(track))
        truth[stem] = planted
    return truth


def make_samples(
    n: int, seed: int = 0, labels: tuple[str, ...] = DEFAULT_LABELS
) -> list[tuple[tuple[int, ...], str]]:
    """(tokens, label) pairs following the planted rule, skipping MIDI I/O."""
    rng = np.random.default_rng(seed)
    samples = []
    for _ in range(n):
        label = labels[rng.integers(0, len(labels))]
        samples.append((planted_tokens(_melody_slots(rng, label)), label))
    return samples


def make_replacement_samples(seed: int = 0) -> tuple[list, dict[tuple[str, str], float]]:
    """Pairs with planted substitution structure and the exact confidences.

    Melody groups are built so the directional confidence of the biggest
    replacements lands near the strongest observed pop-music substitutions
    (Dm replaced by F, F replaced by Dm).
    """
    rng = np.random.default_rng(seed)
    # (target, replacement, target_count, replacement_count) per melody group
    plan = [
        ("Dm", "F", 13, 7),
        ("F", "Dm", 12, 6),
        ("C", "Am", 9, 4),
        ("Am", "C", 9, 3),
        ("G", "Em", 10, 2),
        ("Em", "G", 10, 3),
        ("C", "G", 11, 2),
    ]
    samples = []
    totals: dict[str, int] = {}
    replaced: dict[tuple[str, str], int] = {}
    for i, (target, repl, n_target, n_repl) in enumerate(plan):
        melody = tuple(int(rng.integers(1, 13)) for _ in range(TOKENS_PER_BAR - 1))
        melody = (i % 12 + 1,) + melody  # distinct groups
        samples.extend([(melody, target)] * n_target)
        samples.extend([(melody, repl)] * n_repl)
        totals[target] = totals.get(target, 0) + n_target
        replaced[(target, repl)] = replaced.get((target, repl), 0) + n_repl
    confidences = {
        pair: count / totals[pair[0]] for pair, count in replaced.items()
    }
    return samples, confidences
