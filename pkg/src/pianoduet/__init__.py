"""Real-time human-robot piano duet engine.

Subsystems: SMF parsing (smf), melody tokenization (tokens), corpus
extraction (corpus, synthetic), the chord classifier (model, replacement),
accompaniment scheduling (accompany), the keystroke oscillator (cpg),
the simulated robot plant and its predictive controller (robot),
cooperation analytics (sync_metrics, harness) and the live/replay
session coordinator (session, server, cli).
"""

from pianoduet.accompany import CHORD_LABELS, CHORD_TONES, d_of_tau, decide_next, layout_strikes, voice_chord
from pianoduet.config import SessionConfig, load_config
from pianoduet.corpus import ChordMelodyPair, MirConfig, extract_corpus, extract_pairs, load_dataset, normalize_song, save_dataset, transpose_to_c
from pianoduet.cpg import OscillatorParams, OscillatorState, keystroke_waveform, measure_period, tune_period
from pianoduet.model import ChordClassifier, TrainConfig, gradient_check, load_checkpoint, save_checkpoint, train
from pianoduet.replacement import ReplacementTable, build_replacement_table, evaluate
from pianoduet.robot import KeyboardGeometry, MpcConfig, PlantState, mpc_step, plan_trajectory, plant_step
from pianoduet.session import SessionCoordinator, run_replay
from pianoduet.smf import (
    KeystrokeMetrics,
    MidiParseError,
    MidiTrack,
    MidiWriteError,
    NoteEvent,
    keystroke_metrics,
    parse_smf,
    write_smf,
)
from pianoduet.sync_metrics import build_report, deviation_entropy, mae_sae, sync_index, time_gaps, transfer_entropy
from pianoduet.tokens import BarTokens, PitchClassInfo, bar_duration, compress_pitch, pitch_variation, tokenize_bar

__all__ = [
    "BarTokens",
    "CHORD_LABELS",
    "CHORD_TONES",
    "ChordClassifier",
    "ChordMelodyPair",
    "KeyboardGeometry",
    "KeystrokeMetrics",
    "MidiParseError",
    "MidiTrack",
    "MidiWriteError",
    "MirConfig",
    "MpcConfig",
    "NoteEvent",
    "OscillatorParams",
    "OscillatorState",
    "PitchClassInfo",
    "PlantState",
    "ReplacementTable",
    "SessionConfig",
    "SessionCoordinator",
    "TrainConfig",
    "bar_duration",
    "build_replacement_table",
    "build_report",
    "compress_pitch",
    "d_of_tau",
    "decide_next",
    "deviation_entropy",
    "evaluate",
    "extract_corpus",
    "extract_pairs",
    "gradient_check",
    "keystroke_metrics",
    "keystroke_waveform",
    "layout_strikes",
    "load_checkpoint",
    "load_config",
    "load_dataset",
    "mae_sae",
    "measure_period",
    "mpc_step",
    "normalize_song",
    "parse_smf",
    "pitch_variation",
    "plan_trajectory",
    "plant_step",
    "run_replay",
    "save_checkpoint",
    "save_dataset",
    "sync_index",
    "time_gaps",
    "tokenize_bar",
    "train",
    "transfer_entropy",
    "transpose_to_c",
    "tune_period",
    "voice_chord",
    "write_smf",
]
