"""Cooperation analytics: timing gaps, phase locking, entropies.

All metrics run over matched event series (heavy-beat timestamps of the
human and robot voices).  Entropy and transfer entropy use plug-in
histogram estimators with base-2 logs, so everything reports in bits.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

DEFAULT_BIN_WIDTH = 0.020  # seconds per deviation histogram bin
DEFAULT_TE_BINS = 4
MIN_TE_LENGTH = 50


def time_gaps(human: np.ndarray, robot: np.ndarray) -> np.ndarray:
    """Per-beat human-minus-robot timestamp differences."""
    human = np.asarray(human, dtype=float)
    robot = np.asarray(robot, dtype=float)
    if human.shape != robot.shape:
        raise ValueError(
            f"beat series lengths differ: {human.shape[0]} vs {robot.shape[0]}"
        )
    return human - robot


def mae_sae(human: np.ndarray, robot: np.ndarray) -> tuple[float, float]:
    """Mean and sum of absolute beat-timestamp errors."""
    gaps = np.abs(time_gaps(human, robot))
    if gaps.size == 0:
        raise ValueError("empty beat series")
    sae = float(gaps.sum())
    return sae / gaps.size, sae


def event_phases(beats: np.ndarray, sample_times: np.ndarray) -> np.ndarray:
    """Instantaneous phase of an event series at the given times.

    Phase advances 2*pi per beat, linearly interpolated between consecutive
    beats and extrapolated with the edge intervals outside them.
    """
    beats = np.asarray(beats, dtype=float)
    if beats.size < 2:
        raise ValueError("need at least two beats to define a phase")
    if (np.diff(beats) <= 0).any():
        raise ValueError("beat timestamps must be strictly increasing")
    idx = np.interp(sample_times, beats, np.arange(beats.size))
    # np.interp clamps; extend the first/last inter-beat interval outward
    t = np.asarray(sample_times, dtype=float)
    before = t < beats[0]
    after = t > beats[-1]
    idx = np.where(before, (t - beats[0]) / (beats[1] - beats[0]), idx)
    idx = np.where(
        after, beats.size - 1 + (t - beats[-1]) / (beats[-1] - beats[-2]), idx
    )
    return 2.0 * np.pi * idx


def sync_index(phase_human: np.ndarray, phase_robot: np.ndarray) -> float:
    """Phase-locking value: magnitude of the mean phase-difference phasor."""
    ph = np.asarray(phase_human, dtype=float)
    pr = np.asarray(phase_robot, dtype=float)
    if ph.shape != pr.shape:
        raise ValueError("phase series lengths differ")
    if ph.size == 0:
        raise ValueError("empty phase series")
    return float(abs(np.exp(1j * (ph - pr)).mean()))


def deviation_entropy(deviations: np.ndarray, bin_width: float = DEFAULT_BIN_WIDTH) -> float:
    """Shannon entropy (bits) of the binned deviation distribution."""
    deviations = np.asarray(deviations, dtype=float)
    if deviations.size == 0:
        raise ValueError("empty deviation series")
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    bins = np.floor(deviations / bin_width).astype(np.int64)
    counts = np.asarray(list(Counter(bins.tolist()).values()), dtype=float)
    probs = counts / counts.sum()
    return float(-(probs * np.log2(probs)).sum())


def quantile_bins(series: np.ndarray, bins: int = DEFAULT_TE_BINS) -> np.ndarray:
    """Discretize a series into near-equal-occupancy integer symbols."""
    series = np.asarray(series, dtype=float)
    if series.size == 0:
        raise ValueError("empty series")
    edges = np.quantile(series, np.linspace(0, 1, bins + 1)[1:-1])
    return np.searchsorted(edges, series, side="right").astype(np.int64)


def _entropy_of_rows(rows: np.ndarray) -> float:
    counts = np.asarray(list(Counter(map(tuple, rows.tolist())).values()), dtype=float)
    probs = counts / counts.sum()
    return float(-(probs * np.log2(probs)).sum())


def transfer_entropy(
    source: np.ndarray,
    target: np.ndarray,
    lag_source: int = 1,
    lag_target: int = 1,
) -> float:
    """Information flow source -> target over discrete symbol series (bits).

    Plug-in estimate of H(target_t | target_{t-lag}) minus the same entropy
    additionally conditioned on source_{t-lag}; nonnegative by construction
    up to estimator noise.
    """
    source = np.asarray(source, dtype=np.int64)
    target = np.asarray(target, dtype=np.int64)
    if source.shape != target.shape:
        raise ValueError("series lengths differ")
    if lag_source < 1 or lag_target < 1:
        raise ValueError("lags must be >= 1")
    start = max(lag_source, lag_target)
    n = target.size - start
    if n < MIN_TE_LENGTH:
        raise ValueError(
            f"series too short: {n} usable points, need at least {MIN_TE_LENGTH} "
            f"for lags ({lag_target}, {lag_source})"
        )
    tgt = target[start:]
    tgt_lag = target[start - lag_target : target.size - lag_target]
    src_lag = source[start - lag_source : source.size - lag_source]

    h_joint2 = _entropy_of_rows(np.column_stack([tgt, tgt_lag]))
    h_lag = _entropy_of_rows(tgt_lag[:, None])
    h_joint3 = _entropy_of_rows(np.column_stack([tgt, tgt_lag, src_lag]))
    h_lag2 = _entropy_of_rows(np.column_stack([tgt_lag, src_lag]))
    return (h_joint2 - h_lag) - (h_joint3 - h_lag2)


def surrogate_threshold(
    source: np.ndarray,
    target: np.ndarray,
    n_surrogates: int = 100,
    percentile: float = 95.0,
    seed: int = 0,
    lag_source: int = 1,
    lag_target: int = 1,
) -> float:
    """TE percentile over source-shuffled surrogates (coupling null)."""
    rng = np.random.default_rng(seed)
    source = np.asarray(source)
    values = [
        transfer_entropy(rng.permutation(source), target, lag_source, lag_target)
        for _ in range(n_surrogates)
    ]
    return float(np.percentile(values, percentile))


@dataclass(frozen=True)
class SyncReport:
    """Cooperation metrics for one session's matched beat series."""

    tg: tuple[float, ...]
    mean_tg: float
    mean_abs_tg: float
    si: float
    mae: float
    sae: float
    deviation_entropy_bits: float
    te_r_to_h_bits: float | None
    bin_width: float
    te_lags: tuple[int, int]

    def format(self) -> str:
        lines = [
            f"beats            {len(self.tg)}",
            f"mean TG (s)      {self.mean_tg:+.4f}",
            f"mean |TG| (s)    {self.mean_abs_tg:.4f}",
            f"SI               {self.si:.4f}",
            f"MAE (s)          {self.mae:.4f}",
            f"SAE (s)          {self.sae:.4f}",
            f"entropy (bits)   {self.deviation_entropy_bits:.4f}",
        ]
        if self.te_r_to_h_bits is not None:
            lines.append(f"TE R->H (bits)   {self.te_r_to_h_bits:.4f}")
        return "\n".join(lines)


def build_report(
    human_beats: np.ndarray,
    robot_beats: np.ndarray,
    bin_width: float = DEFAULT_BIN_WIDTH,
    te_bins: int = DEFAULT_TE_BINS,
    te_lags: tuple[int, int] = (1, 1),
) -> SyncReport:
    """All metrics for matched beat series; TE only when series are long enough."""
    gaps = time_gaps(human_beats, robot_beats)
    mae, sae = mae_sae(human_beats, robot_beats)
    phases_h = event_phases(human_beats, human_beats)
    phases_r = event_phases(robot_beats, human_beats)
    si = sync_index(phases_h, phases_r)
    entropy = deviation_entropy(gaps, bin_width)
    te = None
    if gaps.size - max(te_lags) >= MIN_TE_LENGTH + 1:
        human_iti = np.diff(np.asarray(human_beats, dtype=float))
        robot_iti = np.diff(np.asarray(robot_beats, dtype=float))
        te = transfer_entropy(
            quantile_bins(robot_iti, te_bins),
            quantile_bins(human_iti, te_bins),
            te_lags[1],
            te_lags[0],
        )
    return SyncReport(
        tg=tuple(float(g) for g in gaps),
        mean_tg=float(gaps.mean()),
        mean_abs_tg=float(np.abs(gaps).mean()),
        si=si,
        mae=mae,
        sae=sae,
        deviation_entropy_bits=entropy,
        te_r_to_h_bits=te,
        bin_width=bin_width,
        te_lags=te_lags,
    )
