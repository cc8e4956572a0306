"""The duet coordinator: bar clock, decisions, robot drive, event fan-out.

One coordinator owns all mutable session state and is advanced in fixed
control periods, in virtual time for replay and wall time for live mode.
Melody tokens of bar p are all determined once the bar's 16th sampling
instant (15/16 through the bar) has passed, so the chord and strike count
for bar p+1 are decided there: the one-bar sliding window stays causal
while the remaining sixteenth plus the stolen slot fraction buys travel
time for the chord switch.  Switches that still cannot arrive in time
strike late and log a timing fault; the speed ceiling is never violated.

Bars are half-open [start, start + t_bar): a note timestamped exactly on
a boundary belongs to the later bar.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

from pianoduet.accompany import CHORD_LABELS, Strike, d_of_tau, layout_strikes, voice_chord
from pianoduet.config import SessionConfig
from pianoduet.cpg import OscillatorParams, Waveform, keystroke_waveform
from pianoduet.robot import (
    InfeasibleSwitchError,
    KeyboardGeometry,
    MpcConfig,
    NoteCollector,
    PlantState,
    mpc_step,
    plan_trajectory,
    plant_step,
)
from pianoduet.smf import MidiTrack, NoteEvent
from pianoduet.tokens import TOKENS_PER_BAR, bar_duration, pitch_variation, tokenize_bar

DECISION_TOKEN = 15  # tokens sample at k/16; after 15/16 the bar is determined


@dataclass
class ScheduledStrike:
    strike: Strike
    window_start: float  # when the waveform playback begins
    waveform: Waveform
    is_downbeat: bool
    bar: int
    postponed: float = 0.0  # accumulated lateness while travel finishes
    late_logged: bool = False
    beat_recorded: bool = False


@dataclass
class Decision:
    bar: int  # the bar this decision accompanies
    chord: str
    ck: int
    tau: int
    tokens: tuple[int, ...]
    zeta: float | None
    v: float | None


class SessionCoordinator:
    """Single-writer session engine; advance_to() is the only mutator."""

    def __init__(
        self,
        model,
        cfg: SessionConfig,
        geometry: KeyboardGeometry | None = None,
        oscillator: OscillatorParams | None = None,
        total_bars: int | None = None,
        warm_start: bool = True,
    ):
        self.model = model
        self.cfg = cfg
        self.geometry = geometry or KeyboardGeometry()
        self.oscillator = oscillator or OscillatorParams()
        self.t_bar = bar_duration(cfg.tempo_bpm, cfg.beats_per_bar)
        self.dt = cfg.control_dt
        self.total_bars = total_bars
        self.mpc_cfg = MpcConfig(v_max=cfg.v_max, dt=cfg.control_dt)

        self.now = 0.0
        self.decided_bar = 0  # highest bar whose tokens have been closed
        self.melody: list[NoteEvent] = []
        self.open_notes: dict[int, tuple[float, int]] = {}
        self.dropped_late = 0

        self.decisions: dict[int, Decision] = {}
        self.schedule: list[ScheduledStrike] = []
        self.active: ScheduledStrike | None = None

        self.plant = PlantState()
        self.voicing = None
        self.travel_target: float | None = None
        self.travel_speed = 0.0
        self.travel_depart = 0.0
        self.travel_arrival = 0.0

        self.collector = NoteCollector()
        self.log: list[dict] = []
        self.faults: list[dict] = []
        self.trajectory: list[tuple] = []  # (t, o_y, o_z, v, zeta, cost) per step
        self._last_switch: tuple[float | None, float | None] = (None, None)
        self.human_beats: dict[int, float] = {}
        self.robot_beats: dict[int, float] = {}
        self.cycle_seconds: list[float] = []
        self.subscribers: list = []
        self._pending_records: list[tuple[float, dict]] = []
        self._waveforms: dict[int, Waveform] = {}
        if warm_start:
            for ck in (1, 2, 4):  # oscillator tuning must not bill a live cycle
                self._waveform(ck)

    # ----- messages -----

    def _emit(self, record: dict):
        self.log.append(record)
        for push in self.subscribers:
            push(record)

    def fault(self, kind: str, detail: str):
        record = {"type": "fault", "t": round(self.now, 6), "kind": kind, "detail": detail}
        self.faults.append(record)
        self._emit(record)

    # ----- melody ingestion -----

    def bar_of(self, t: float) -> int:
        return int(math.floor(t / self.t_bar + 1e-9)) + 1

    def _decision_time(self, bar: int) -> float:
        return (bar - 1) * self.t_bar + DECISION_TOKEN / TOKENS_PER_BAR * self.t_bar

    def note_on(self, pitch: int, velocity: int, t: float):
        """Live ingestion; a note older than its bar's decision is dropped."""
        bar = self.bar_of(t)
        if bar <= self.decided_bar and t < self._decision_time(self.decided_bar):
            self.dropped_late += 1
            self.fault("late_note", f"pitch {pitch} at {t:.3f}: decision already out")
            return
        if pitch in self.open_notes:
            start, vel = self.open_notes.pop(pitch)
            self._finish_note(pitch, vel, start, t)
        self.open_notes[pitch] = (t, velocity)
        self.human_beats.setdefault(bar, t)
        self._emit({"type": "note_on", "t": round(t, 6), "pitch": pitch, "velocity": velocity})

    def note_off(self, pitch: int, t: float):
        if pitch not in self.open_notes:
            return
        start, vel = self.open_notes.pop(pitch)
        self._finish_note(pitch, vel, start, t)
        self._emit({"type": "note_off", "t": round(t, 6), "pitch": pitch})

    def _finish_note(self, pitch: int, velocity: int, start: float, end: float):
        if end <= start:
            end = start + self.dt
        self.melody.append(NoteEvent(pitch, velocity, start, end))

    def feed_events(self, events: list[NoteEvent]):
        """Replay path: ingest finished notes wholesale (already sorted).

        The note records enter the log as the clock passes them so the
        emitted stream stays time-ordered.
        """
        for ev in events:
            self.human_beats.setdefault(self.bar_of(ev.t_press), ev.t_press)
        self.melody.extend(events)
        for ev in events:
            self._pending_records.append(
                (ev.t_press, {"type": "note_on", "t": round(ev.t_press, 6),
                              "pitch": ev.pitch, "velocity": ev.velocity})
            )
            self._pending_records.append(
                (ev.t_release, {"type": "note_off", "t": round(ev.t_release, 6),
                                "pitch": ev.pitch})
            )
        self._pending_records.sort(key=lambda item: item[0])

    def _bar_events(self, bar: int) -> list[NoteEvent]:
        start = (bar - 1) * self.t_bar
        end = start + self.t_bar
        events = [
            ev for ev in self.melody if ev.t_press < end and ev.t_release + 0.05 >= start
        ]
        for pitch, (t0, vel) in self.open_notes.items():
            if t0 < end:  # still held: sounds through the whole bar
                events.append(NoteEvent(pitch, vel, t0, end + self.dt))
        return sorted(events, key=lambda e: (e.t_press, e.pitch))

    # ----- decisions -----

    def _waveform(self, ck: int) -> Waveform:
        # waveforms integrate at the oscillator's own fine step; the control
        # loop subsamples them at its period
        if ck not in self._waveforms:
            self._waveforms[ck] = keystroke_waveform(
                self.oscillator, self.cfg.tempo_bpm, ck, self.cfg.beats_per_bar
            )
        return self._waveforms[ck]

    def _decide(self, bar: int):
        """Close bar's tokens and plan bar+1 (chord, ck, strikes, switch)."""
        start = (bar - 1) * self.t_bar
        tokens = tokenize_bar(
            self._bar_events(bar), start, self.cfg.tempo_bpm, self.cfg.beats_per_bar
        )
        self.decided_bar = bar
        self._emit(
            {"type": "bar_closed", "t": round(self.now, 6), "p": bar, "tokens": list(tokens.tokens)}
        )
        next_bar = bar + 1
        if self.total_bars is not None and next_bar > self.total_bars:
            return

        probs = self.model.predict_proba(tokens.tokens)
        chord = CHORD_LABELS[int(probs.argmax())]
        tau = pitch_variation(tokens)
        ck = d_of_tau(tau)
        strikes = layout_strikes(ck, bar * self.t_bar, self.t_bar)
        decision = Decision(next_bar, chord, ck, tau, tokens.tokens, None, None)
        self._plan_switch(bar, decision)
        self.decisions[next_bar] = decision

        waveform = self._waveform(ck)
        for k, strike in enumerate(strikes):
            self.schedule.append(
                ScheduledStrike(
                    strike=strike,
                    window_start=strike.time - waveform.onset_index * waveform.dt,
                    waveform=waveform,
                    is_downbeat=(k == 0),
                    bar=next_bar,
                )
            )
        self.schedule.sort(key=lambda s: s.window_start)
        self._emit(
            {
                "type": "chord",
                "t": round(self.now, 6),
                "p": next_bar,
                "label": chord,
                "ck": ck,
                "tau": tau,
                "strike_times": [round(s.time, 6) for s in strikes],
                "zeta": decision.zeta,
                "v": decision.v,
            }
        )

    def _plan_switch(self, bar: int, decision: Decision):
        """Set up horizontal travel toward the next chord's anchor."""
        previous = self.decisions.get(bar)
        current_chord = previous.chord if previous else decision.chord
        prev_ck = previous.ck if previous else 1
        plan = plan_trajectory(
            current_chord, decision.chord, prev_ck, self.geometry,
            self.cfg.tempo_bpm, self.cfg.beats_per_bar, self.dt,
        )
        travel = abs(plan.next_anchor - self.plant.y)
        if travel <= 1e-9:
            self.travel_target = None
            return
        boundary = bar * self.t_bar
        try:
            mpc = mpc_step(self.plant, plan, self.mpc_cfg)
            decision.zeta, decision.v = mpc.zeta, mpc.v
            self._last_switch = (mpc.zeta, mpc.cost)
            depart = max(self.now, boundary - mpc.zeta * plan.slot)
            # the decision instant may clamp the window; keep arrival on time
            window = max(self.dt, boundary - depart)
            speed = min(self.mpc_cfg.v_max, max(mpc.v, travel / window))
        except InfeasibleSwitchError as err:
            self.fault("infeasible_switch", str(err))
            decision.zeta, decision.v = None, self.mpc_cfg.v_max
            self._last_switch = (None, None)
            depart, speed = self.now, self.mpc_cfg.v_max
        self.travel_depart = depart
        self.travel_speed = speed
        self.travel_target = plan.next_anchor
        self.travel_arrival = depart + travel / speed

    # ----- the control loop -----

    def advance_to(self, t_target: float):
        """Run whole control periods until now + dt would pass t_target."""
        while self.now + self.dt <= t_target + 1e-12:
            started = time.perf_counter()
            self._cycle()
            self.cycle_seconds.append(time.perf_counter() - started)

    def _cycle(self):
        t_next = self.now + self.dt
        while self._pending_records and self._pending_records[0][0] < t_next:
            self._emit(self._pending_records.pop(0)[1])
        bar = self.bar_of(self.now)
        if bar > self.decided_bar and self.now >= self._decision_time(bar) - 1e-12:
            if self.total_bars is None or bar <= self.total_bars:
                self._decide(bar)

        v_cmd, target = 0.0, None
        if self.travel_target is not None and self.now >= self.travel_depart - 1e-12:
            v_cmd, target = self.travel_speed, self.travel_target

        z_cmd = self._vertical_command(t_next)
        self.plant, actions = plant_step(
            self.plant,
            z_cmd,
            self.dt,
            self.geometry,
            self.voicing,
            v_command=v_cmd,
            target_y=target,
            v_max=self.mpc_cfg.v_max,
        )
        if target is not None and self.plant.y == target:
            self.travel_target = None
        for action in actions:
            if action.kind == "press":
                if (
                    self.active is not None
                    and self.active.is_downbeat
                    and not self.active.beat_recorded
                ):
                    self.active.beat_recorded = True
                    self.robot_beats[self.active.bar] = action.time
                self._emit(
                    {
                        "type": "strike",
                        "t": round(action.time, 6),
                        "pitches": list(action.pitches),
                        "velocity": action.velocity,
                    }
                )
        self.collector.add(actions)
        zeta, cost = self._last_switch
        self.trajectory.append(
            (t_next, self.plant.y, self.plant.z_down, self.plant.vy, zeta, cost)
        )
        self.now = t_next

    def _vertical_command(self, t: float) -> float:
        if self.active is not None:
            window_end = (
                self.active.window_start + self.active.postponed + self.active.waveform.period
            )
            if t >= window_end:
                self.active = None
        while self.schedule and self.schedule[0].window_start + self.schedule[0].postponed <= t:
            nxt = self.schedule[0]
            arriving_late = (
                self.travel_target is not None
                and self.travel_arrival > nxt.strike.time + nxt.postponed + 1e-9
            )
            if nxt.is_downbeat and arriving_late:
                nxt.postponed += self.dt  # hand cannot reach the keys in time
                if not nxt.late_logged:
                    nxt.late_logged = True
                    self.fault(
                        "late_strike",
                        f"bar downbeat at {nxt.strike.time:.3f} delayed by travel",
                    )
                break
            self.schedule.pop(0)
            self.active = nxt
            self.voicing = voice_chord(self._chord_for_time(nxt.strike.time))
        if self.active is None:
            return 0.0
        w = self.active.waveform
        idx = int(round((t - self.active.window_start - self.active.postponed) / w.dt))
        if 0 <= idx < len(w.samples):
            scale = self.geometry.press_depth / w.threshold if w.threshold > 0 else 0.0
            return float(w.samples[idx] * scale)
        return 0.0

    def _chord_for_time(self, t: float) -> str:
        decision = self.decisions.get(self.bar_of(t))
        return decision.chord if decision else "C"

    # ----- results -----

    def finish(self):
        for pitch in list(self.open_notes):
            self.note_off(pitch, self.now)
        self.collector.close_all(self.now)

    def accompaniment_events(self) -> list[NoteEvent]:
        return sorted(self.collector.notes, key=lambda e: (e.t_press, e.pitch))

    def human_beat_list(self) -> list[float]:
        return [self.human_beats[k] for k in sorted(self.human_beats)]


@dataclass
class ReplayResult:
    melody: list[NoteEvent]
    accompaniment: list[NoteEvent]
    merged: MidiTrack
    decisions: list[Decision]
    log: list[dict]
    faults: list[dict]
    human_beats: dict[int, float]  # bar -> first melody press
    robot_beats: dict[int, float]  # bar -> downbeat strike press
    cycle_seconds: list[float]
    trajectory: list[tuple]  # per-step (t, o_y, o_z, v, zeta, cost)
    dropped_late: int = 0

    def trajectory_text(self) -> str:
        """Columnar plant trace for plotting: t, o_y, o_z, v, zeta, cost."""
        lines = ["t\to_y\to_z\tv\tzeta\tcost"]
        for t, o_y, o_z, v, zeta, cost in self.trajectory:
            lines.append(
                f"{t:.3f}\t{o_y:.3f}\t{o_z:.3f}\t{v:.3f}\t"
                f"{'' if zeta is None else zeta}\t"
                f"{'' if cost is None else format(cost, '.6g')}"
            )
        return "\n".join(lines) + "\n"

    def matched_beats(self) -> tuple[list[float], list[float]]:
        """Heavy-beat pairs for the bars where both voices played."""
        bars = sorted(set(self.human_beats) & set(self.robot_beats))
        return (
            [self.human_beats[b] for b in bars],
            [self.robot_beats[b] for b in bars],
        )


def run_replay(
    melody: MidiTrack,
    model,
    cfg: SessionConfig | None = None,
    geometry: KeyboardGeometry | None = None,
    oscillator: OscillatorParams | None = None,
) -> ReplayResult:
    """Deterministic faster-than-real-time session over a recorded melody.

    The session clock starts at the melody's time origin; the robot is
    silent through bar 1 (its first decision needs a completed bar) and
    accompanies every later bar from the previous bar's tokens.
    """
    cfg = cfg or SessionConfig()
    events = sorted(melody.events, key=lambda e: (e.t_press, e.pitch))
    t_bar = bar_duration(cfg.tempo_bpm, cfg.beats_per_bar)
    if events:
        last = max(ev.t_release for ev in events)
        total_bars = max(1, int(math.ceil(last / t_bar - 1e-9)))
    else:
        total_bars = 0
    coordinator = SessionCoordinator(model, cfg, geometry, oscillator, total_bars=total_bars)
    coordinator._emit(
        {
            "type": "hello",
            "t": 0.0,
            "payload": {
                "tempo_bpm": cfg.tempo_bpm,
                "beats_per_bar": cfg.beats_per_bar,
                "bar_seconds": coordinator.t_bar,
                "bars": total_bars,
            },
        }
    )
    coordinator.feed_events(events)
    coordinator.advance_to(total_bars * coordinator.t_bar)
    coordinator.finish()

    accompaniment = coordinator.accompaniment_events()
    merged = MidiTrack(
        sorted(events + accompaniment, key=lambda e: (e.t_press, e.pitch)),
        melody.ticks_per_quarter or 480,
        [(0, int(round(60e6 / cfg.tempo_bpm)))],
    )
    return ReplayResult(
        melody=events,
        accompaniment=accompaniment,
        merged=merged,
        decisions=[coordinator.decisions[k] for k in sorted(coordinator.decisions)],
        log=coordinator.log,
        faults=coordinator.faults,
        human_beats=dict(coordinator.human_beats),
        robot_beats=dict(coordinator.robot_beats),
        cycle_seconds=list(coordinator.cycle_seconds),
        trajectory=list(coordinator.trajectory),
        dropped_late=coordinator.dropped_late,
    )
