import numpy as np
import pytest

from pianoduet.sync_metrics import (
    build_report,
    deviation_entropy,
    event_phases,
    mae_sae,
    quantile_bins,
    surrogate_threshold,
    sync_index,
    time_gaps,
    transfer_entropy,
)


def test_time_gaps_identical_series():
    beats = np.arange(10) * 2.667
    assert (time_gaps(beats, beats) == 0).all()


def test_time_gaps_constant_lead():
    robot = np.arange(20) * 2.667
    human = robot + 0.0225
    gaps = time_gaps(human, robot)
    assert gaps.mean() == pytest.approx(0.0225)


def test_time_gaps_elementwise_oracle():
    rng = np.random.default_rng(0)
    human = np.sort(rng.random(50)) * 100
    robot = np.sort(rng.random(50)) * 100
    gaps = time_gaps(human, robot)
    for i in range(50):
        assert gaps[i] == human[i] - robot[i]


def test_time_gaps_length_mismatch():
    with pytest.raises(ValueError, match="lengths differ"):
        time_gaps(np.arange(3), np.arange(4))


def test_sync_index_identical_phases():
    phases = np.linspace(0, 40 * np.pi, 100)
    assert sync_index(phases, phases) == pytest.approx(1.0)


def test_sync_index_uniform_grid_cancels():
    diffs = np.array([0.0, np.pi / 2, np.pi, 3 * np.pi / 2])
    assert sync_index(diffs, np.zeros(4)) == pytest.approx(0.0, abs=1e-12)


def test_sync_index_invariant_to_common_offset():
    rng = np.random.default_rng(1)
    ph = rng.random(64) * 2 * np.pi
    pr = rng.random(64) * 2 * np.pi
    assert sync_index(ph + 1.234, pr + 1.234) == pytest.approx(sync_index(ph, pr))


def test_sync_index_bounds():
    rng = np.random.default_rng(2)
    for _ in range(20):
        si = sync_index(rng.random(30) * 7, rng.random(30) * 7)
        assert 0.0 <= si <= 1.0


def test_mae_sae_example():
    mae, sae = mae_sae(np.array([1.0, 2.0]), np.array([1.1, 1.9]))
    assert mae == pytest.approx(0.1)
    assert sae == pytest.approx(0.2)


def test_mae_sae_identical():
    beats = np.arange(5, dtype=float)
    assert mae_sae(beats, beats) == (0.0, 0.0)


def test_mae_times_n_equals_sae():
    rng = np.random.default_rng(3)
    human = np.sort(rng.random(37))
    robot = np.sort(rng.random(37))
    mae, sae = mae_sae(human, robot)
    assert mae * 37 == pytest.approx(sae, rel=1e-12)


def test_deviation_entropy_single_bin_is_zero():
    assert deviation_entropy(np.full(100, 0.005), 0.02) == 0.0


def test_deviation_entropy_uniform_8_bins_is_3_bits():
    devs = np.repeat(np.arange(8) * 0.02 + 0.01, 25)
    assert deviation_entropy(devs, 0.02) == pytest.approx(3.0)


def test_deviation_entropy_permutation_invariant():
    rng = np.random.default_rng(4)
    devs = rng.normal(0, 0.05, 500)
    assert deviation_entropy(devs) == pytest.approx(
        deviation_entropy(rng.permutation(devs))
    )


def test_event_phases_linear_interpolation():
    beats = np.array([0.0, 1.0, 2.0])
    phases = event_phases(beats, np.array([0.0, 0.5, 1.0, 1.5]))
    assert phases == pytest.approx([0.0, np.pi, 2 * np.pi, 3 * np.pi])


def test_transfer_entropy_deterministic_coupling_two_bits():
    # S_H copies S_R with one step of lag; 4 uniform symbols carry 2 bits
    rng = np.random.default_rng(7)
    source = rng.integers(0, 4, 20_000)
    target = np.roll(source, 1)
    te = transfer_entropy(source, target)
    assert te == pytest.approx(2.0, abs=0.01)


def test_transfer_entropy_independent_series_near_zero():
    rng = np.random.default_rng(8)
    source = rng.integers(0, 4, 10_000)
    target = rng.integers(0, 4, 10_000)
    te = transfer_entropy(source, target)
    assert te < 0.02
    threshold = surrogate_threshold(source, target, n_surrogates=60, seed=1)
    assert te <= threshold * 1.05 + 1e-4


def test_transfer_entropy_coupled_beats_surrogates():
    rng = np.random.default_rng(9)
    source = rng.integers(0, 4, 3_000)
    target = np.roll(source, 1)
    te = transfer_entropy(source, target)
    threshold = surrogate_threshold(source, target, n_surrogates=60, seed=2)
    assert te > threshold


def test_transfer_entropy_nonnegative():
    rng = np.random.default_rng(10)
    for _ in range(10):
        source = rng.integers(0, 3, 400)
        target = rng.integers(0, 3, 400)
        assert transfer_entropy(source, target) >= -1e-12


def test_transfer_entropy_too_short_reports_minimum():
    with pytest.raises(ValueError, match="need at least 50"):
        transfer_entropy(np.zeros(20, dtype=int), np.zeros(20, dtype=int))


def test_quantile_bins_balanced():
    rng = np.random.default_rng(11)
    symbols = quantile_bins(rng.normal(size=4000), 4)
    counts = np.bincount(symbols)
    assert len(counts) == 4
    assert counts.min() > 800


def test_build_report_identical_logs():
    beats = np.arange(60) * 2.667
    report = build_report(beats, beats)
    assert report.si == pytest.approx(1.0)
    assert report.mae == 0.0
    assert report.deviation_entropy_bits == 0.0
    assert report.te_r_to_h_bits == pytest.approx(0.0, abs=1e-9)
    assert "SI" in report.format()
