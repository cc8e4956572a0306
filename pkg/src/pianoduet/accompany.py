"""Accompaniment decisions: which chord, how many strikes, and when.

The chord for bar p is predicted from bar p-1's melody tokens (one-bar
sliding window), the strike count follows the melody's pitch variation,
and strikes subdivide the bar evenly starting on the downbeat with a
decaying velocity profile.
"""

from __future__ import annotations

from dataclasses import dataclass

from pianoduet.tokens import TOKENS_PER_BAR, BarTokens, pitch_variation

# Triad vocabulary: root/third/fifth pitch classes (C=0 .. B=11).
CHORD_TONES: dict[str, tuple[int, int, int]] = {
    "C": (0, 4, 7),
    "Dm": (2, 5, 9),
    "Em": (4, 7, 11),
    "F": (5, 9, 0),
    "G": (7, 11, 2),
    "Am": (9, 0, 4),
    "Bdim": (11, 2, 5),
}
CHORD_LABELS: tuple[str, ...] = tuple(CHORD_TONES)

# Bass register: roots live in the octave starting at C3.
DEFAULT_ROOT_OCTAVE_BASE = 48

DEFAULT_CK_THRESHOLDS = (9, 13)
DEFAULT_STRIKE_VELOCITY = 96
DEFAULT_VELOCITY_DECAY = 0.85


@dataclass(frozen=True)
class ChordVoicing:
    """A triad placed on the keyboard with its three-finger assignment."""

    label: str
    pitches: tuple[int, int, int]  # root, third, fifth as MIDI numbers
    octave_base: int

    @property
    def finger_map(self) -> dict[str, int]:
        root, third, fifth = self.pitches
        return {"little": root, "middle": third, "thumb": fifth}


def voice_chord(label: str, octave_base: int = DEFAULT_ROOT_OCTAVE_BASE) -> ChordVoicing:
    """Place a chord's triad with the root inside the given octave."""
    if label not in CHORD_TONES:
        raise ValueError(f"unknown chord label {label!r}")
    root_pc, third_pc, fifth_pc = CHORD_TONES[label]
    root = octave_base + root_pc
    third = root + (third_pc - root_pc) % 12
    fifth = root + (fifth_pc - root_pc) % 12
    return ChordVoicing(label, (root, third, fifth), octave_base)


def d_of_tau(tau: int, thresholds: tuple[int, int] = DEFAULT_CK_THRESHOLDS) -> int:
    """Consecutive keystrokes for a bar with pitch variation tau.

    Monotone step function onto {1, 2, 4}: one strike below the first
    threshold, two from there, four from the second threshold.
    """
    if not 1 <= tau <= TOKENS_PER_BAR:
        raise ValueError(f"tau {tau} outside 1..{TOKENS_PER_BAR}")
    lo, hi = thresholds
    if not 1 <= lo <= hi:
        raise ValueError("thresholds must satisfy 1 <= lo <= hi")
    return 1 + (tau >= lo) + 2 * (tau >= hi)


@dataclass(frozen=True)
class Strike:
    time: float
    velocity: int
    token_index: int  # 1-based melody token the strike lands on


def layout_strikes(
    ck: int,
    bar_start: float,
    t_bar: float,
    base_velocity: int = DEFAULT_STRIKE_VELOCITY,
    decay: float = DEFAULT_VELOCITY_DECAY,
) -> list[Strike]:
    """Evenly spaced strike times within one bar, first on the downbeat.

    Strike strength decays geometrically across the bar.
    """
    if ck not in (1, 2, 4):
        raise ValueError(f"ck must be 1, 2 or 4, got {ck}")
    strikes = []
    for k in range(ck):
        velocity = max(1, min(127, round(base_velocity * decay**k)))
        strikes.append(
            Strike(
                time=bar_start + k * t_bar / ck,
                velocity=velocity,
                token_index=k * TOKENS_PER_BAR // ck + 1,
            )
        )
    return strikes


@dataclass(frozen=True)
class AccompanimentPlan:
    """The decision for one bar: chord, strike count and strike schedule."""

    bar_index: int
    chord: str
    ck: int
    strikes: tuple[Strike, ...]


def decide_next(model, last_bar: BarTokens, last_chord: str | None = None,
                ck_thresholds: tuple[int, int] = DEFAULT_CK_THRESHOLDS) -> tuple[str, int]:
    """Chord and strike count for the upcoming bar, from the completed bar.

    The chord is the classifier's argmax over the previous bar's tokens;
    the strike count maps that bar's pitch variation through d_of_tau.
    last_chord is accepted for interface completeness (the classifier is
    conditioned on melody only).
    """
    probs = model.predict_proba(last_bar.tokens)
    chord = CHORD_LABELS[int(probs.argmax())]
    return chord, d_of_tau(pitch_variation(last_bar), ck_thresholds)


def plan_bar(model, bar_index: int, last_bar: BarTokens,
             last_chord: str | None = None) -> AccompanimentPlan:
    """Full per-bar plan: decide_next plus the strike layout for the bar."""
    chord, ck = decide_next(model, last_bar, last_chord)
    bar_start = last_bar.bar_start + last_bar.bar_duration
    strikes = layout_strikes(ck, bar_start, last_bar.bar_duration)
    return AccompanimentPlan(bar_index, chord, ck, tuple(strikes))
