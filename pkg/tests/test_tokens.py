import pytest
from hypothesis import given
from hypothesis import strategies as st

from pianoduet.smf import NoteEvent
from pianoduet.tokens import (
    BarTokens,
    bar_duration,
    compress_pitch,
    pitch_variation,
    tokenize_bar,
)

T_BAR_90 = 60.0 * 4 / 90.0


def quarter_note_bar(shift=0, start=0.0):
    """C4 E4 G4 C5 as quarter notes filling one 4/4 bar at 90 BPM."""
    q = T_BAR_90 / 4
    return [
        NoteEvent(p + shift, 80, start + i * q, start + (i + 1) * q)
        for i, p in enumerate([60, 64, 67, 72])
    ]


def test_compress_pitch_examples():
    info = compress_pitch(60)
    assert (info.compressed, info.octave) == (1, 5)
    info = compress_pitch(21)
    assert (info.compressed, info.octave) == (10, 1)
    info = compress_pitch(108)
    assert (info.compressed, info.octave) == (1, 9)


def test_compress_pitch_rejects_out_of_range():
    with pytest.raises(ValueError):
        compress_pitch(20)
    with pytest.raises(ValueError):
        compress_pitch(109)


def test_tokenize_quarter_note_bar():
    bar = tokenize_bar(quarter_note_bar(), 0.0, 90.0)
    assert list(bar.tokens) == [1, 1, 1, 1, 5, 5, 5, 5, 8, 8, 8, 8, 1, 1, 1, 1]
    assert bar.bar_duration == pytest.approx(T_BAR_90)


def test_tokenize_silent_bar():
    bar = tokenize_bar([], 0.0, 90.0)
    assert list(bar.tokens) == [0] * 16


def test_tokenize_longest_hold_wins():
    step = T_BAR_90 / 16
    # Over token 0, pitch 64 is held 0.4 s while pitch 67 only 0.1 s.
    events = sorted(
        [NoteEvent(67, 80, 0.0, 0.1), NoteEvent(64, 80, 0.0, 0.4)],
        key=lambda e: (e.t_press, e.pitch),
    )
    bar = tokenize_bar(events, 0.0, 90.0)
    assert bar.tokens[0] == 5  # 64 % 12 + 1
    assert step > 0.1


def test_tokenize_tie_prefers_lower_pitch():
    events = sorted(
        [NoteEvent(64, 80, 0.0, 1.0), NoteEvent(67, 80, 0.0, 1.0)],
        key=lambda e: (e.t_press, e.pitch),
    )
    bar = tokenize_bar(events, 0.0, 90.0)
    assert bar.tokens[0] == 5


def test_tokenize_transposition_invariance():
    base = tokenize_bar(quarter_note_bar(), 0.0, 90.0)
    shifted = tokenize_bar(quarter_note_bar(shift=12), 0.0, 90.0)
    assert base.tokens == shifted.tokens


def test_tokenize_note_hold_repeats_token():
    events = [NoteEvent(62, 80, 0.0, T_BAR_90)]
    bar = tokenize_bar(events, 0.0, 90.0)
    assert list(bar.tokens) == [3] * 16


def test_bar_tokens_validation():
    with pytest.raises(ValueError):
        BarTokens((0,) * 15, 0.0, T_BAR_90)
    with pytest.raises(ValueError):
        BarTokens((13,) + (0,) * 15, 0.0, T_BAR_90)


def test_bar_duration():
    assert bar_duration(90, 4) == pytest.approx(2.6667, abs=1e-4)
    assert bar_duration(60, 4) == pytest.approx(4.0)
    assert bar_duration(120, 3) == pytest.approx(1.5)


def test_pitch_variation_examples():
    bar = BarTokens((1,) * 4 + (5,) * 4 + (8,) * 4 + (1,) * 4, 0.0, T_BAR_90)
    assert pitch_variation(bar) == 4
    assert pitch_variation(BarTokens((0,) * 16, 0.0, T_BAR_90)) == 1
    alternating = tuple(1 + (i % 2) for i in range(16))
    assert pitch_variation(BarTokens(alternating, 0.0, T_BAR_90)) == 16


def test_pitch_variation_rests_do_not_count():
    bar = BarTokens((1, 0, 1, 0, 1, 0, 1, 0) * 2, 0.0, T_BAR_90)
    assert pitch_variation(bar) == 1


@given(st.lists(st.integers(0, 12), min_size=16, max_size=16))
def test_pitch_variation_bounds_and_relabel_invariance(tokens):
    bar = BarTokens(tuple(tokens), 0.0, T_BAR_90)
    tau = pitch_variation(bar)
    assert 1 <= tau <= 16
    # relabel values 1..12 by a fixed permutation preserving equality structure
    perm = {0: 0, **{v: (v % 12) + 1 for v in range(1, 13)}}
    relabeled = BarTokens(tuple(perm[t] for t in tokens), 0.0, T_BAR_90)
    assert pitch_variation(relabeled) == tau
