"""Melody bar tokenization: 16 sixteenth-note tokens of compressed pitch.

A bar is sampled at 16 evenly spaced instants.  Each token holds the
octave-compressed index of the note sounding there (1..12, 0 for a rest),
so a transposition by any whole number of octaves leaves the tokens
unchanged.  Pitch variation within one bar drives how many chord strikes
the accompaniment schedules.
"""

from __future__ import annotations

from dataclasses import dataclass

from pianoduet.smf import NoteEvent

TOKENS_PER_BAR = 16
DEFAULT_MELODY_TOLERANCE = 0.030  # seconds a release still counts as sounding

# Quantized corpora start notes exactly on sampling instants; float tempo
# rescaling and integer-microsecond tempo encoding can push the press a hair
# past the instant.  A microsecond of slack is far below any musical
# timescale and keeps boundary ownership deterministic.
_PRESS_EPS = 1e-6


def bar_duration(tempo_bpm: float, beats_per_bar: int = 4) -> float:
    """Length of one bar in seconds: 60 * X / beta."""
    if tempo_bpm <= 0:
        raise ValueError("tempo must be positive")
    return 60.0 * beats_per_bar / tempo_bpm


@dataclass(frozen=True)
class PitchClassInfo:
    compressed: int  # (pitch mod 12) + 1, in 1..12
    octave: int  # floor(pitch / 12) mod 12


@dataclass(frozen=True)
class BarTokens:
    """One bar of melody as 16 compressed-pitch tokens (0 = rest)."""

    tokens: tuple[int, ...]
    bar_start: float
    bar_duration: float

    def __post_init__(self):
        if len(self.tokens) != TOKENS_PER_BAR:
            raise ValueError(f"expected {TOKENS_PER_BAR} tokens, got {len(self.tokens)}")
        if any(not 0 <= t <= 12 for t in self.tokens):
            raise ValueError("tokens must lie in 0..12")
        if self.bar_duration <= 0:
            raise ValueError("bar_duration must be positive")


def compress_pitch(pitch: int) -> PitchClassInfo:
    """Map a MIDI pitch (21..108) onto its compressed index and octave."""
    if not 21 <= pitch <= 108:
        raise ValueError(f"pitch {pitch} outside piano range 21..108")
    return PitchClassInfo(compressed=pitch % 12 + 1, octave=(pitch // 12) % 12)


def tokenize_bar(
    events: list[NoteEvent],
    bar_start: float,
    tempo_bpm: float,
    beats_per_bar: int = 4,
    melody_tolerance: float = DEFAULT_MELODY_TOLERANCE,
) -> BarTokens:
    """Sample one bar of a sorted note stream into 16 compressed tokens.

    A note sounds at instant T when press <= T < release + melody_tolerance.
    When several notes sound simultaneously, the one held longest over the
    token's sixteenth-note interval wins; ties go to the lower pitch.
    """
    t_bar = bar_duration(tempo_bpm, beats_per_bar)
    step = t_bar / TOKENS_PER_BAR
    tokens = []
    for j in range(TOKENS_PER_BAR):
        t_token = bar_start + j * step
        best = None  # (overlap, -pitch) maximized
        for ev in events:
            if ev.t_press > t_token + _PRESS_EPS:
                break
            if t_token < ev.t_release + melody_tolerance:
                overlap = min(ev.t_release + melody_tolerance, t_token + step) - max(
                    ev.t_press, t_token
                )
                key = (overlap, -ev.pitch)
                if best is None or key > best[0]:
                    best = (key, ev.pitch)
        tokens.append(0 if best is None else best[1] % 12 + 1)
    return BarTokens(tuple(tokens), bar_start, t_bar)


def pitch_variation(bar: BarTokens) -> int:
    """Count pitch changes within the bar, starting from 1.

    Each adjacent pair of sounding tokens with different compressed pitches
    adds one; rests neither add nor reset.  Result lies in 1..16.
    """
    tau = 1
    for a, b in zip(bar.tokens, bar.tokens[1:]):
        if a != 0 and b != 0 and a != b:
            tau += 1
    return tau
