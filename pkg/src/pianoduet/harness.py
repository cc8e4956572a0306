"""Feedback-condition simulation: a scripted human under varied feedback.

The robot holds the session's bar clock; the scripted human plays a fixed
melody with a tempo that drifts as a biased random walk and is corrected
toward the robot's last strike with a gain set by the available feedback
channels.  Audio carries slightly more corrective weight than vision, and
with no feedback at all the tempo drifts monotonically faster, so the
four conditions reproduce the observed ordering of timing error and
deviation entropy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from pianoduet.smf import MidiTrack, NoteEvent
from pianoduet.tokens import bar_duration

CONDITIONS = ("NV-NA", "NV-A", "V-NA", "V-A")
_CONDITION_SEED_OFFSET = {c: i for i, c in enumerate(CONDITIONS)}

VISUAL_GAIN = 0.18
AUDIO_GAIN = 0.28  # single-sense reliance tilts toward hearing
TEMPO_NOISE = 0.008  # random-walk step of the per-bar drift fraction
TEMPO_ACCEL = 0.004  # uncorrected players creep faster each bar

# Fixed four-note melody pattern per bar (pitch classes of a C arpeggio).
MELODY_PATTERN = (60, 64, 67, 72)


@dataclass(frozen=True)
class FeedbackSession:
    condition: str
    gain: float
    human_beats: np.ndarray  # heavy-beat timestamps, one per bar
    robot_beats: np.ndarray
    human_track: MidiTrack
    seed: int


def feedback_gain(condition: str) -> float:
    if condition not in CONDITIONS:
        raise ValueError(f"condition must be one of {CONDITIONS}, got {condition!r}")
    visual = "V-" in condition and not condition.startswith("NV")
    audio = condition.endswith("-A")
    return VISUAL_GAIN * visual + AUDIO_GAIN * audio


def simulate_feedback_condition(
    condition: str,
    seed: int = 0,
    bars: int = 32,
    tempo_bpm: float = 90.0,
    beats_per_bar: int = 4,
) -> FeedbackSession:
    """Deterministic session logs for one feedback condition and seed."""
    gain = feedback_gain(condition)
    rng = np.random.default_rng(seed * len(CONDITIONS) + _CONDITION_SEED_OFFSET[condition])
    t_bar = bar_duration(tempo_bpm, beats_per_bar)

    robot_beats = np.arange(bars) * t_bar
    human_beats = np.empty(bars)
    human_beats[0] = 0.0
    drift = 0.0
    for n in range(1, bars):
        # feedback recenters both tempo (drift) and phase (deviation)
        drift = (1.0 - gain) * drift + rng.normal(0.0, TEMPO_NOISE) - TEMPO_ACCEL
        period = t_bar * (1.0 + drift)
        deviation = human_beats[n - 1] - robot_beats[n - 1]
        human_beats[n] = human_beats[n - 1] + period - gain * deviation

    events = []
    quarter = t_bar / 4
    for n in range(bars):
        # the fixed melody, warped into the human's local tempo
        local = (human_beats[n + 1] - human_beats[n]) / t_bar if n + 1 < bars else 1.0
        for k, pitch in enumerate(MELODY_PATTERN):
            start = human_beats[n] + k * quarter * local
            events.append(NoteEvent(pitch, 90, start, start + 0.9 * quarter * local))
    track = MidiTrack(events, 480, [(0, int(round(60e6 / tempo_bpm)))]).sorted()
    return FeedbackSession(condition, gain, human_beats, robot_beats, track, seed)


def simulate_all_conditions(
    seed: int = 0, bars: int = 32, tempo_bpm: float = 90.0
) -> dict[str, FeedbackSession]:
    return {
        c: simulate_feedback_condition(c, seed, bars, tempo_bpm) for c in CONDITIONS
    }
