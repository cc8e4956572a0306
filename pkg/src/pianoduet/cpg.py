"""Matsuoka mutual-inhibition oscillator driving vertical keystrokes.

Two adapting neurons inhibit each other; the rectified difference of their
outputs forms an impulsive pulse train that presses keys more promptly
than a sine of equal period.  Dynamics (classic form, tonic input on the
membrane equation):

    T_r dx_i/dt = -x_i - sum_j a_ij * y_j - b * f_i + s_i
    T_a df_i/dt = -f_i + y_i
    y_i = max(x_i, 0)

Integration is fixed-step fourth-order Runge-Kutta with the two-neuron
system unrolled to scalar arithmetic (the stepper sits inside the
real-time loop).  Period control scales (T_r, T_a) jointly by bisection
against the measured limit-cycle period; scaling both time constants
rescales the limit cycle exactly, so the bracket starts tight.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from pianoduet.tokens import bar_duration

DEFAULT_DT = 1e-3


@dataclass(frozen=True)
class OscillatorParams:
    t_rise: float = 0.25
    t_adapt: float = 0.5
    tonic: tuple[float, float] = (1.0, 1.0)
    inhibition: tuple[tuple[float, float], tuple[float, float]] = ((0.0, 2.0), (2.0, 0.0))
    self_inhibition: float = 2.5

    def __post_init__(self):
        if self.t_rise <= 0 or self.t_adapt <= 0:
            raise ValueError("time constants must be positive")
        if self.self_inhibition < 0:
            raise ValueError("self-inhibition gain must be nonnegative")
        if any(self.inhibition[i][i] != 0.0 for i in range(2)):
            raise ValueError("self-coupling entries of the inhibition matrix must be 0")

    def scaled(self, factor: float) -> "OscillatorParams":
        """Proportionally slower (or faster) copy; the limit cycle scales with it."""
        return replace(self, t_rise=self.t_rise * factor, t_adapt=self.t_adapt * factor)


@dataclass(frozen=True)
class OscillatorState:
    x: tuple[float, float] = (0.1, 0.0)
    f: tuple[float, float] = (0.0, 0.0)

    @property
    def y(self) -> tuple[float, float]:
        return (max(self.x[0], 0.0), max(self.x[1], 0.0))


def _rk4(x1, x2, f1, f2, p: OscillatorParams, dt: float, steps: int,
         out: np.ndarray | None = None):
    """Unrolled two-neuron RK4; optionally records max(y1 - y2, 0) per step."""
    tr, ta, b = p.t_rise, p.t_adapt, p.self_inhibition
    s1, s2 = p.tonic
    a12, a21 = p.inhibition[0][1], p.inhibition[1][0]

    def deriv(x1, x2, f1, f2):
        y1 = x1 if x1 > 0.0 else 0.0
        y2 = x2 if x2 > 0.0 else 0.0
        return (
            (-x1 - a12 * y2 - b * f1 + s1) / tr,
            (-x2 - a21 * y1 - b * f2 + s2) / tr,
            (-f1 + y1) / ta,
            (-f2 + y2) / ta,
        )

    half = 0.5 * dt
    sixth = dt / 6.0
    for i in range(steps):
        if out is not None:
            y1 = x1 if x1 > 0.0 else 0.0
            y2 = x2 if x2 > 0.0 else 0.0
            d = y1 - y2
            out[i] = d if d > 0.0 else 0.0
        k1 = deriv(x1, x2, f1, f2)
        k2 = deriv(x1 + half * k1[0], x2 + half * k1[1], f1 + half * k1[2], f2 + half * k1[3])
        k3 = deriv(x1 + half * k2[0], x2 + half * k2[1], f1 + half * k2[2], f2 + half * k2[3])
        k4 = deriv(x1 + dt * k3[0], x2 + dt * k3[1], f1 + dt * k3[2], f2 + dt * k3[3])
        x1 += sixth * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        x2 += sixth * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        f1 += sixth * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        f2 += sixth * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3])
    return x1, x2, f1, f2


def step(state: OscillatorState, params: OscillatorParams, dt: float) -> OscillatorState:
    """One RK4 step; raises if the state leaves the finite domain."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    x1, x2, f1, f2 = _rk4(state.x[0], state.x[1], state.f[0], state.f[1], params, dt, 1)
    if not all(np.isfinite(v) for v in (x1, x2, f1, f2)):
        raise FloatingPointError(
            f"oscillator state diverged: x=({x1}, {x2}), f=({f1}, {f2})"
        )
    return OscillatorState((x1, x2), (f1, f2))


def simulate(
    params: OscillatorParams,
    duration: float,
    dt: float = DEFAULT_DT,
    state: OscillatorState | None = None,
) -> np.ndarray:
    """Pulse signal u(t) = max(y1 - y2, 0) sampled every dt over duration."""
    state = state or OscillatorState()
    n = int(round(duration / dt))
    out = np.empty(n)
    final = _rk4(state.x[0], state.x[1], state.f[0], state.f[1], params, dt, n, out)
    if not all(np.isfinite(v) for v in final):
        raise FloatingPointError("oscillator state diverged during simulation")
    return out


def _upward_crossings(u: np.ndarray, level: float) -> np.ndarray:
    above = u > level
    return np.flatnonzero(~above[:-1] & above[1:]) + 1


def measure_period(
    params: OscillatorParams,
    dt: float = DEFAULT_DT,
    settle_cycles: int = 10,
    measure_cycles: int = 10,
) -> float:
    """Mean post-transient interval between pulse onsets of the limit cycle."""
    horizon = (settle_cycles + measure_cycles + 4) * _period_scale_guess(params)
    u = simulate(params, horizon, dt)
    crossings = _upward_crossings(u, 1e-6)
    if len(crossings) < settle_cycles + 2:
        raise RuntimeError("oscillator did not settle into a limit cycle")
    onsets = crossings[settle_cycles:]
    return float(np.diff(onsets).mean() * dt)


def _period_scale_guess(params: OscillatorParams) -> float:
    # Empirically the reference regime's period is a small multiple of T_a.
    return 4.0 * params.t_adapt


@lru_cache(maxsize=64)
def tune_period(
    params: OscillatorParams,
    target_period: float,
    dt: float = DEFAULT_DT,
    rel_tol: float = 1e-3,
    max_iter: int = 40,
) -> OscillatorParams:
    """Bisect a joint (T_r, T_a) scale until the measured period matches.

    The limit-cycle period grows monotonically (in fact linearly) with the
    time-constant scale; the T_a/T_r ratio and gain structure stay fixed,
    so the bracket opens narrowly around the linear estimate.
    """
    if target_period <= 0:
        raise ValueError("target period must be positive")
    if target_period < 50 * dt:
        raise ValueError(
            f"target period {target_period} s under-resolved at dt={dt}; "
            "the tunable range needs period >= 50*dt"
        )
    base = measure_period(params, dt)
    guess = target_period / base
    lo, hi = 0.9 * guess, 1.1 * guess
    if not measure_period(params.scaled(lo), dt) <= target_period <= measure_period(
        params.scaled(hi), dt
    ):
        raise ValueError(
            f"target period {target_period} s outside the tunable bracket "
            f"around scale {guess:.4f}"
        )
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        period = measure_period(params.scaled(mid), dt)
        if abs(period - target_period) <= rel_tol * target_period:
            return params.scaled(mid)
        if period < target_period:
            lo = mid
        else:
            hi = mid
    return params.scaled(0.5 * (lo + hi))


@dataclass(frozen=True)
class Waveform:
    """One period of the keystroke pulse, aligned to its press onset."""

    samples: np.ndarray  # pulse u(t) >= 0 over exactly one period
    dt: float
    threshold: float  # press level in pulse units
    onset_index: int  # first sample at or above the threshold

    @property
    def period(self) -> float:
        return len(self.samples) * self.dt

    @property
    def peak(self) -> float:
        return float(self.samples.max())

    def press_duty_cycle(self) -> float:
        return float((self.samples >= self.threshold).mean())


def keystroke_waveform(
    params: OscillatorParams,
    tempo_bpm: float,
    ck: int,
    beats_per_bar: int = 4,
    dt: float = DEFAULT_DT,
    threshold_ratio: float = 0.5,
) -> Waveform:
    """Tune the oscillator so one pulse fires per strike slot of the bar.

    Returns a single period starting at a pulse onset; the press threshold
    sits at threshold_ratio of the pulse peak.
    """
    if ck not in (1, 2, 4):
        raise ValueError("ck must be 1, 2 or 4")
    target = bar_duration(tempo_bpm, beats_per_bar) / ck
    tuned = tune_period(params, target, dt)
    u = simulate(tuned, 14 * target, dt)
    crossings = _upward_crossings(u, 1e-6)
    if len(crossings) < 12:
        raise RuntimeError("tuned oscillator produced too few pulses")
    start = crossings[10]
    n = int(round(target / dt))
    samples = u[start : start + n]
    threshold = threshold_ratio * float(samples.max())
    onset = int(np.argmax(samples >= threshold))
    return Waveform(samples, dt, threshold, onset)


def sine_duty_cycle(threshold_ratio: float) -> float:
    """Press duty of an equal-period, equal-peak raised sine at the threshold.

    The comparison baseline of the keystroke trajectory: s(t) =
    peak * (1 + sin) / 2 spends this fraction of its cycle above
    threshold_ratio * peak.
    """
    level = 2.0 * threshold_ratio - 1.0  # sin(x) > level
    if level <= -1.0:
        return 1.0
    if level >= 1.0:
        return 0.0
    return float((np.pi - 2 * np.arcsin(level)) / (2 * np.pi))
