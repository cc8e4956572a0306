"""Simulated piano-playing plant and its chord-switch optimizer.

The six-joint arm reduces to a two-axis task-space plant: a
velocity-commanded horizontal axis sliding along the keyboard and a
vertical axis that follows the keystroke oscillator's displacement
command.  Chord switching steals the final fraction (1/2^R of a press
slot) of the bar for horizontal travel; the optimizer picks that
fraction and the travel speed by minimizing a tracking-plus-effort cost
subject to the switch-feasibility coupling

    v * zeta * (t_bar / D) >= h * d

(time available times speed covers the distance), speed saturation and
keyboard box bounds.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from pianoduet.accompany import CHORD_TONES, ChordVoicing
from pianoduet.tokens import bar_duration  # noqa: F401  (re-exported: Eq of the bar)

# White keys per octave, indexed left to right.
WHITE_KEY_INDEX = {0: 0, 2: 1, 4: 2, 5: 3, 7: 4, 9: 5, 11: 6}

ZETA_SET = (1.0, 0.5, 0.25, 0.125)  # binary partition: 1/2^R, R in 0..3


@dataclass(frozen=True)
class KeyboardGeometry:
    white_key_width: float = 23.5  # mm
    key_travel: float = 10.0  # mm of full key displacement
    press_depth: float = 6.0  # mm at which the key triggers

    def __post_init__(self):
        if not 0 < self.press_depth <= self.key_travel:
            raise ValueError("press_depth must lie within the key travel")

    def anchor(self, chord: str) -> float:
        """Horizontal coordinate (mm) of a chord's root key."""
        root_class = CHORD_TONES[chord][0]
        return WHITE_KEY_INDEX[root_class] * self.white_key_width

    def chord_distance(self, a: str, b: str) -> int:
        """White keys traversed between two chord roots."""
        root_a, root_b = CHORD_TONES[a][0], CHORD_TONES[b][0]
        return abs(WHITE_KEY_INDEX[root_a] - WHITE_KEY_INDEX[root_b])

    @property
    def span(self) -> tuple[float, float]:
        return (0.0, 6 * self.white_key_width)


@dataclass(frozen=True)
class PlantState:
    y: float = 0.0  # horizontal position (mm)
    z_down: float = 0.0  # downward key displacement (mm, 0 = rest)
    vy: float = 0.0  # horizontal velocity (mm/s)
    t: float = 0.0


@dataclass(frozen=True)
class MpcConfig:
    horizon: int = 8  # predicted steps returned with the decision
    track_weight: float = 1.0
    effort_weight: float = 1e-4
    v_max: float = 250.0  # mm/s
    dt: float = 0.010
    zeta_set: tuple[float, ...] = ZETA_SET

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.track_weight <= 0 or self.effort_weight <= 0:
            raise ValueError("cost weights must be positive")
        for z in self.zeta_set:
            r = np.log2(1.0 / z)
            if not (z > 0 and abs(r - round(r)) < 1e-12):
                raise ValueError(f"zeta {z} is not of the form 1/2^R")


@dataclass(frozen=True)
class MpcDecision:
    v: float  # commanded horizontal speed (mm/s)
    zeta: float  # fraction of the final press slot used for travel
    cost: float
    trajectory: np.ndarray  # predicted horizontal positions on the window grid
    depart_time: float  # seconds into the window when motion starts


class InfeasibleSwitchError(RuntimeError):
    """No (zeta, v <= v_max) covers the switch distance: the strike is late."""

    def __init__(self, h: int, ck: int, slot: float, v_max: float, required: float):
        self.h, self.ck, self.slot, self.v_max, self.required = h, ck, slot, v_max, required
        super().__init__(
            f"chord switch over {h} keys infeasible: needs {required:.1f} mm/s "
            f"at zeta=1, v_max={v_max:.1f} mm/s (slot {slot:.3f} s)"
        )


@dataclass(frozen=True)
class TrajectoryPlan:
    """Per-bar reference: strikes on the current chord, switch at the end."""

    current_anchor: float
    next_anchor: float
    h: int
    slot: float  # t_bar / ck, duration of one press slot
    strike_times: tuple[float, ...]  # within the bar, relative to bar start
    window_times: np.ndarray  # switch window grid, relative to window start
    reference_y: np.ndarray  # musical ideal on that grid

    @property
    def displacement(self) -> float:
        return abs(self.next_anchor - self.current_anchor)


def plan_trajectory(
    current_chord: str,
    next_chord: str,
    ck: int,
    geometry: KeyboardGeometry,
    tempo_bpm: float,
    beats_per_bar: int = 4,
    dt: float = 0.010,
) -> TrajectoryPlan:
    """Reference for one bar: hold the current anchor through its strikes,
    stand on the next anchor from the bar boundary on.

    The switch window is the final press slot; the ideal reference switches
    instantaneously at the boundary, and the optimizer decides how much of
    the window to actually spend moving.
    """
    t_bar = bar_duration(tempo_bpm, beats_per_bar)
    slot = t_bar / ck
    a, b = geometry.anchor(current_chord), geometry.anchor(next_chord)
    n = int(round(slot / dt))
    times = np.arange(n + 1) * dt
    reference = np.where(times < slot, a, b)
    strike_times = tuple(k * slot for k in range(ck))
    return TrajectoryPlan(
        current_anchor=a,
        next_anchor=b,
        h=geometry.chord_distance(current_chord, next_chord),
        slot=slot,
        strike_times=strike_times,
        window_times=times,
        reference_y=reference,
    )


def _rollout(start: float, target: float, depart: float, v: float,
             times: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Positions and speeds for a hold-move-hold candidate.

    Motion advances in whole control periods (the plant integrates v * dt
    per step), starting at the first grid instant at or past the departure
    time, and clamps on arrival.
    """
    direction = np.sign(target - start)
    travel = abs(target - start)
    k0 = int(np.ceil(depart / dt - 1e-9))
    steps = np.maximum(0, np.arange(len(times)) - k0)
    moved = np.minimum(steps * v * dt, travel)
    positions = start + direction * moved
    moving = (np.arange(len(times)) >= k0) & (moved < travel)
    speeds = np.where(moving, v, 0.0)
    return positions, speeds


def _candidate_cost(plan: TrajectoryPlan, cfg: MpcConfig, start: float,
                    zeta: float, v: float) -> tuple[float, np.ndarray]:
    depart = plan.slot - zeta * plan.slot
    positions, speeds = _rollout(
        start, plan.next_anchor, depart, v, plan.window_times, cfg.dt
    )
    err = positions - plan.reference_y
    cost = cfg.track_weight * float(err @ err) + cfg.effort_weight * float(
        speeds @ speeds
    )
    return cost, positions


def _golden_min(fn, lo: float, hi: float, iters: int = 48) -> float:
    """Golden-section minimum of a unimodal function on [lo, hi]."""
    if hi <= lo:
        return lo
    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(iters):
        if fc <= fd:  # ties keep the left side: plateaus resolve to lower v
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = fn(d)
    return c if fc < fd else d


def mpc_step(
    state: PlantState,
    plan: TrajectoryPlan,
    cfg: MpcConfig,
    prefer_half: bool = True,
) -> MpcDecision:
    """Choose (zeta, v) for the upcoming chord switch.

    Candidates are the binary-partition zeta values; each zeta's best speed
    comes from a golden-section search of the rollout cost over the
    feasible speed interval.  Values at or below 1/2 are preferred so the
    final press keeps its attack; zeta = 1 only rescues otherwise
    infeasible switches.  Ties go to the smaller zeta (longest hold).
    """
    distance = plan.displacement
    if distance == 0.0 and abs(state.y - plan.next_anchor) < 1e-9:
        zeta = min(cfg.zeta_set)
        cost, positions = _candidate_cost(plan, cfg, state.y, zeta, 0.0)
        return MpcDecision(0.0, zeta, cost, positions[: cfg.horizon + 1], plan.slot)

    travel = abs(plan.next_anchor - state.y)
    candidates: list[MpcDecision] = []
    for zeta in sorted(cfg.zeta_set):
        v_req = travel / (zeta * plan.slot)
        if v_req > cfg.v_max:
            continue
        best_v = _golden_min(
            lambda v: _candidate_cost(plan, cfg, state.y, zeta, v)[0],
            v_req,
            cfg.v_max,
        )
        cost, positions = _candidate_cost(plan, cfg, state.y, zeta, best_v)
        depart = plan.slot - zeta * plan.slot
        candidates.append(MpcDecision(best_v, zeta, cost, positions, depart))

    if not candidates:
        raise InfeasibleSwitchError(
            plan.h, len(plan.strike_times), plan.slot, cfg.v_max, travel / plan.slot
        )
    preferred = [c for c in candidates if c.zeta <= 0.5]
    if prefer_half and preferred:
        candidates = preferred
    best = min(candidates, key=lambda c: (c.cost, c.zeta))
    return replace(best, trajectory=best.trajectory[: max(cfg.horizon + 1, 2)])


# ----- the plant -----


@dataclass(frozen=True)
class KeyAction:
    kind: str  # "press" or "release"
    time: float
    pitches: tuple[int, ...]
    velocity: int  # meaningful for presses; 0 on releases


def plant_step(
    state: PlantState,
    z_command: float,
    dt: float,
    geometry: KeyboardGeometry,
    voicing: ChordVoicing | None,
    v_command: float = 0.0,
    target_y: float | None = None,
    v_max: float = 250.0,
    velocity_gain: float = 1.5,
) -> tuple[PlantState, list[KeyAction]]:
    """Advance the plant one control period.

    The horizontal axis integrates the commanded speed toward target_y with
    hard saturation at v_max and stops on arrival.  The vertical axis takes
    the displacement command directly (the oscillator owns its dynamics);
    press/release actions fire on threshold crossings, with press velocity
    proportional to the crossing speed.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    v = float(np.clip(abs(v_command), 0.0, v_max))
    y = state.y
    if target_y is not None and v > 0.0:
        step_len = v * dt
        remaining = target_y - y
        if abs(remaining) <= step_len:
            y = target_y
            v = 0.0 if abs(remaining) == 0.0 else abs(remaining) / dt
        else:
            y += np.sign(remaining) * step_len
    lo, hi = geometry.span
    y = float(np.clip(y, lo, hi))

    z = float(np.clip(z_command, 0.0, geometry.key_travel))
    t_next = state.t + dt
    actions: list[KeyAction] = []
    if voicing is not None:
        crossed_down = state.z_down < geometry.press_depth <= z
        crossed_up = z < geometry.press_depth <= state.z_down
        if crossed_down:
            speed = (z - state.z_down) / dt  # mm/s at the crossing
            midi_velocity = int(np.clip(round(velocity_gain * speed), 1, 127))
            actions.append(KeyAction("press", t_next, voicing.pitches, midi_velocity))
        elif crossed_up:
            actions.append(KeyAction("release", t_next, voicing.pitches, 0))
    new_state = PlantState(y=y, z_down=z, vy=v if target_y is not None else 0.0, t=t_next)
    return new_state, actions


class NoteCollector:
    """Folds press/release actions into completed NoteEvents."""

    def __init__(self):
        self.open: list[KeyAction] = []
        self.notes = []

    def add(self, actions: list[KeyAction]):
        from pianoduet.smf import NoteEvent

        for action in actions:
            if action.kind == "press":
                self.open.append(action)
            elif action.kind == "release" and self.open:
                press = self.open.pop(0)
                for pitch in press.pitches:
                    self.notes.append(
                        NoteEvent(pitch, press.velocity, press.time, action.time, channel=1)
                    )

    def close_all(self, t: float):
        while self.open:
            press = self.open.pop(0)
            self.add([KeyAction("release", max(t, press.time + 1e-3), press.pitches, 0)])
