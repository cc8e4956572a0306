"""Time-allocation decisions for chord switches across the keyboard.

For each distance/strike-count combination the optimizer reports the slot
fraction it steals for travel and the commanded speed; infeasible cases
(too far, too fast a bar) are reported rather than exceeding the speed
ceiling.
"""

from pianoduet.robot import (
    InfeasibleSwitchError,
    KeyboardGeometry,
    MpcConfig,
    PlantState,
    mpc_step,
    plan_trajectory,
)

geometry = KeyboardGeometry()
cfg = MpcConfig()
print(f"white key width {geometry.white_key_width} mm, v_max {cfg.v_max} mm/s\n")

switches = [("C", "C"), ("C", "Dm"), ("C", "F"), ("C", "G"), ("C", "Am"), ("C", "Bdim")]
print(f"{'switch':<10}{'h':>3} | " + " | ".join(f"ck={ck:<14}" for ck in (1, 2, 4)))
for a, b in switches:
    cells = []
    for ck in (1, 2, 4):
        plan = plan_trajectory(a, b, ck, geometry, tempo_bpm=90.0)
        try:
            d = mpc_step(PlantState(y=geometry.anchor(a)), plan, cfg)
            cells.append(f"z={d.zeta:<5} v={d.v:6.1f}")
        except InfeasibleSwitchError as err:
            cells.append(f"late ({err.required:5.0f} mm/s)")
    h = geometry.chord_distance(a, b)
    print(f"{a + '->' + b:<10}{h:>3} | " + " | ".join(f"{c:<16}" for c in cells))

print(
    "\nEvery accepted decision satisfies v * zeta * (t_bar / D) >= h * d;"
    "\nthe final press keeps its attack whenever a zeta <= 1/2 is feasible."
)
