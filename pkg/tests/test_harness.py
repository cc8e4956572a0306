import numpy as np
import pytest

from pianoduet.harness import (
    CONDITIONS,
    feedback_gain,
    simulate_all_conditions,
    simulate_feedback_condition,
)
from pianoduet.sync_metrics import deviation_entropy, mae_sae


def test_gains_reflect_feedback_channels():
    assert feedback_gain("NV-NA") == 0.0
    assert feedback_gain("NV-A") > feedback_gain("V-NA") > 0.0  # audio over vision
    assert feedback_gain("V-A") == pytest.approx(
        feedback_gain("NV-A") + feedback_gain("V-NA")
    )


def test_unknown_condition_rejected():
    with pytest.raises(ValueError):
        simulate_feedback_condition("X-Y")


def test_same_seed_same_condition_identical_logs():
    a = simulate_feedback_condition("V-A", seed=5)
    b = simulate_feedback_condition("V-A", seed=5)
    assert (a.human_beats == b.human_beats).all()
    assert a.human_track.events == b.human_track.events


def test_conditions_draw_independent_streams():
    a = simulate_feedback_condition("NV-A", seed=5)
    b = simulate_feedback_condition("V-NA", seed=5)
    assert not (a.human_beats == b.human_beats).all()


def test_no_feedback_tempo_drifts_monotonically_faster():
    session = simulate_feedback_condition("NV-NA", seed=0, bars=32)
    periods = np.diff(session.human_beats)
    assert periods[-5:].mean() < periods[:5].mean()
    # acceleration means the human runs ahead of the fixed robot clock
    assert (session.human_beats - session.robot_beats)[-1] < 0


def test_orderings_match_observed_extremes():
    sessions = simulate_all_conditions(seed=0)
    maes = {c: mae_sae(s.human_beats, s.robot_beats)[0] for c, s in sessions.items()}
    entropies = {
        c: deviation_entropy(s.human_beats - s.robot_beats)
        for c, s in sessions.items()
    }
    assert maes["V-A"] == min(maes.values())
    assert maes["NV-NA"] == max(maes.values())
    assert entropies["V-A"] == min(entropies.values())
    assert entropies["NV-NA"] == max(entropies.values())


def test_all_conditions_produce_full_logs():
    sessions = simulate_all_conditions(seed=3, bars=16)
    assert set(sessions) == set(CONDITIONS)
    for session in sessions.values():
        assert len(session.human_beats) == 16
        assert len(session.robot_beats) == 16
        assert len(session.human_track.events) == 16 * 4
        assert all(
            a.t_press <= b.t_press
            for a, b in zip(session.human_track.events, session.human_track.events[1:])
        )
