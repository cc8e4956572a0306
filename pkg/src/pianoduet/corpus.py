"""Corpus pipeline: normalize songs, find triads, emit chord-melody pairs.

A song is time-stretched to the session tempo, transposed so its triads
fall into the white-key vocabulary, then scanned for note triplets that
press together and stack as root-position triads.  Each hit yields a
chord label plus the 16-token melody bar anchored at the chord's press
time.  Pairs persist as line-delimited JSON with a schema header and a
manifest carrying the config hash and counts.
"""

from __future__ import annotations

import hashlib
import json
from collections import Counter
from dataclasses import dataclass, replace
from pathlib import Path

from pianoduet.accompany import CHORD_TONES
from pianoduet.smf import DEFAULT_TEMPO_USPQ, MidiTrack, NoteEvent, parse_smf
from pianoduet.tokens import BarTokens, bar_duration, tokenize_bar

BLACK_KEY_CLASSES = frozenset({1, 3, 6, 8, 10})
DATASET_SCHEMA = "pianoduet-pairs-v1"


class DatasetError(ValueError):
    """Raised for unreadable or schema-incompatible dataset files."""


@dataclass(frozen=True)
class MirConfig:
    chord_tolerance: float = 0.050  # seconds; triad presses within 2x count
    melody_tolerance: float = 0.030
    tempo_bpm: float = 90.0
    beats_per_bar: int = 4
    permissible_intervals: frozenset[int] = frozenset({3, 4, 7})
    black_keys: frozenset[int] = BLACK_KEY_CLASSES
    melody_split_pitch: int = 60  # merged tracks: notes at or above are melody

    def __post_init__(self):
        if self.chord_tolerance <= 0 or self.melody_tolerance <= 0:
            raise ValueError("tolerances must be positive")
        if self.tempo_bpm <= 0:
            raise ValueError("tempo must be positive")

    def hash(self) -> str:
        text = json.dumps(
            {
                "chord_tolerance": self.chord_tolerance,
                "melody_tolerance": self.melody_tolerance,
                "tempo_bpm": self.tempo_bpm,
                "beats_per_bar": self.beats_per_bar,
                "permissible_intervals": sorted(self.permissible_intervals),
                "black_keys": sorted(self.black_keys),
                "melody_split_pitch": self.melody_split_pitch,
            },
            sort_keys=True,
        )
        return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class ChordMelodyPair:
    chord_label: str
    melody: BarTokens
    source_song: str = ""
    bar_index: int = 0

    def __post_init__(self):
        if self.chord_label not in CHORD_TONES:
            raise ValueError(f"chord label {self.chord_label!r} not in vocabulary")


def as_samples(pairs) -> list[tuple[tuple[int, ...], str]]:
    """(tokens, label) view of ChordMelodyPairs for the classifier."""
    return [(p.melody.tokens, p.chord_label) for p in pairs]


# ----- tempo normalization -----


def normalize_song(track: MidiTrack, target_bpm: float = 90.0) -> MidiTrack:
    """Time-stretch so the song plays uniformly at target_bpm.

    Each tempo segment is rescaled by its own factor (segment BPM over
    target), which preserves event order and count.  Tracks without tempo
    entries are assumed to already play at 120 BPM.
    """
    if target_bpm <= 0:
        raise ValueError("target tempo must be positive")
    tempo_map = sorted(track.tempo_map) or [(0, DEFAULT_TEMPO_USPQ)]
    tpq = track.ticks_per_quarter

    # segment boundaries in original seconds with per-segment scale factors
    boundaries: list[tuple[float, float]] = []  # (start_seconds, scale)
    seconds = 0.0
    prev_tick = 0
    uspq = DEFAULT_TEMPO_USPQ
    for change_tick, change_uspq in tempo_map:
        seconds += (change_tick - prev_tick) * uspq / (1e6 * tpq)
        prev_tick = change_tick
        uspq = change_uspq
        boundaries.append((seconds, (60e6 / uspq) / target_bpm))
    if not boundaries or boundaries[0][0] > 0:
        boundaries.insert(0, (0.0, (60e6 / DEFAULT_TEMPO_USPQ) / target_bpm))

    def remap(t: float) -> float:
        out = 0.0
        for i, (start, scale) in enumerate(boundaries):
            end = boundaries[i + 1][0] if i + 1 < len(boundaries) else float("inf")
            if t <= start:
                break
            out += (min(t, end) - start) * scale
        return out

    events = [
        replace(ev, t_press=remap(ev.t_press), t_release=remap(ev.t_release))
        for ev in track.events
    ]
    new_uspq = int(round(60e6 / target_bpm))
    return MidiTrack(events, tpq, [(0, new_uspq)]).sorted()


# ----- transposition -----


@dataclass(frozen=True)
class TransposeResult:
    track: MidiTrack
    shift: int  # semitones applied, minimal-magnitude representative
    triad_count: int

    @property
    def low_confidence(self) -> bool:
        return self.triad_count == 0


def _fold_into_range(pitch: int) -> int:
    while pitch < 21:
        pitch += 12
    while pitch > 108:
        pitch -= 12
    return pitch


def transpose_to_c(track: MidiTrack, cfg: MirConfig | None = None) -> TransposeResult:
    """Shift all pitches so detected triads best match the C-major vocabulary.

    Candidate shifts 0..11 are scored by vocabulary-triad count; the winner
    (smallest shift on ties) is applied as its minimal-magnitude equivalent.
    Pitches pushed off the piano are folded back by octaves.
    """
    cfg = cfg or MirConfig()
    counts = []
    for shift in range(12):
        counts.append(len(_detect_triads(track.events, cfg, shift=shift)))
    best = max(counts)
    shift = counts.index(best)  # ties and the no-triad case resolve to 0 first
    applied = shift if shift <= 6 else shift - 12
    if applied == 0:
        return TransposeResult(track.sorted(), 0, best)
    events = [
        replace(ev, pitch=_fold_into_range(ev.pitch + applied)) for ev in track.events
    ]
    return TransposeResult(
        MidiTrack(events, track.ticks_per_quarter, list(track.tempo_map)).sorted(),
        applied,
        best,
    )


# ----- triad detection and pair extraction -----


def _match_vocabulary(p0: int, p1: int, p2: int, cfg: MirConfig) -> str | None:
    """Label for an ascending pitch triple forming a vocabulary triad."""
    third, fifth = p1 - p0, p2 - p0
    if third not in cfg.permissible_intervals or third not in (3, 4):
        return None
    if fifth not in cfg.permissible_intervals or fifth not in (6, 7):
        return None
    if any(p % 12 in cfg.black_keys for p in (p0, p1, p2)):
        return None
    classes = (p0 % 12, p1 % 12, p2 % 12)
    for label, tones in CHORD_TONES.items():
        if classes == tones:
            return label
    return None


def _detect_triads(
    events: list[NoteEvent], cfg: MirConfig, shift: int = 0
) -> list[tuple[float, str]]:
    """(press_time, label) for each note triplet pressed as a triad.

    Only the accompaniment register is scanned; melody notes striking at
    the same instant must not break up a triad's triplet.  The register is
    judged on unshifted pitches: candidate transpositions change key, not
    which hand played a note.
    """
    events = [e for e in events if e.pitch < cfg.melody_split_pitch]
    hits = []
    for i in range(len(events) - 2):
        a, b, c = events[i], events[i + 1], events[i + 2]
        if b.t_press - a.t_press > 2 * cfg.chord_tolerance:
            continue
        if c.t_press - b.t_press > 2 * cfg.chord_tolerance:
            continue
        p0, p1, p2 = sorted((a.pitch + shift, b.pitch + shift, c.pitch + shift))
        label = _match_vocabulary(p0, p1, p2, cfg)
        if label is not None:
            hits.append((a.t_press, label))
    return hits


def extract_pairs(
    track: MidiTrack, cfg: MirConfig | None = None, source_song: str = ""
) -> list[ChordMelodyPair]:
    """Chord-melody pairs from a tempo-normalized track.

    Notes below the register split are triad candidates, the rest form the
    melody.  Each detected triad contributes the 16-token bar anchored at
    its press time.
    """
    cfg = cfg or MirConfig()
    accompaniment = [e for e in track.events if e.pitch < cfg.melody_split_pitch]
    melody = [e for e in track.events if e.pitch >= cfg.melody_split_pitch]
    t_bar = bar_duration(cfg.tempo_bpm, cfg.beats_per_bar)
    pairs = []
    for press_time, label in _detect_triads(accompaniment, cfg):
        bar = tokenize_bar(
            melody, press_time, cfg.tempo_bpm, cfg.beats_per_bar, cfg.melody_tolerance
        )
        pairs.append(
            ChordMelodyPair(
                chord_label=label,
                melody=bar,
                source_song=source_song,
                bar_index=int(press_time / t_bar + 1e-9),
            )
        )
    return pairs


def extract_corpus(directory, cfg: MirConfig | None = None,
                   progress=None) -> list[ChordMelodyPair]:
    """Run the full pipeline over every .mid file in a directory tree."""
    cfg = cfg or MirConfig()
    paths = sorted(Path(directory).rglob("*.mid"))
    all_pairs = []
    for path in paths:
        track = parse_smf(path.read_bytes())
        track = normalize_song(track, cfg.tempo_bpm)
        track = transpose_to_c(track, cfg).track
        pairs = extract_pairs(track, cfg, source_song=path.stem)
        all_pairs.extend(pairs)
        if progress is not None:
            progress(path, len(pairs))
    all_pairs.sort(key=lambda p: (p.source_song, p.bar_index, p.chord_label))
    return all_pairs


# ----- persistence -----


def save_dataset(pairs, path, cfg: MirConfig | None = None):
    """Write pairs as line-delimited JSON plus a sibling manifest."""
    path = Path(path)
    ordered = sorted(pairs, key=lambda p: (p.source_song, p.bar_index, p.chord_label))
    with path.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps({"schema": DATASET_SCHEMA}) + "\n")
        for p in ordered:
            record = {
                "chord": p.chord_label,
                "tokens": list(p.melody.tokens),
                "bar_start": p.melody.bar_start,
                "bar_duration": p.melody.bar_duration,
                "source": p.source_song,
                "bar": p.bar_index,
            }
            fh.write(json.dumps(record) + "\n")
    manifest = {
        "schema": DATASET_SCHEMA,
        "config_hash": (cfg or MirConfig()).hash(),
        "pairs": len(ordered),
        "chords": dict(sorted(Counter(p.chord_label for p in ordered).items())),
    }
    path.with_suffix(path.suffix + ".manifest.json").write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
    )


def load_dataset(path) -> list[ChordMelodyPair]:
    path = Path(path)
    pairs = []
    with path.open("r", encoding="utf-8") as fh:
        header_line = fh.readline()
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"{path}: corrupt header: {exc}") from None
        if header.get("schema") != DATASET_SCHEMA:
            raise DatasetError(
                f"{path}: schema {header.get('schema')!r} != {DATASET_SCHEMA!r}"
            )
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                pairs.append(
                    ChordMelodyPair(
                        chord_label=rec["chord"],
                        melody=BarTokens(
                            tuple(rec["tokens"]), rec["bar_start"], rec["bar_duration"]
                        ),
                        source_song=rec["source"],
                        bar_index=rec["bar"],
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise DatasetError(f"{path}:{lineno}: corrupt record: {exc}") from None
    return pairs
