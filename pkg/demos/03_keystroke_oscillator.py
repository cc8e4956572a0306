"""The impulsive keystroke generator versus a sine baseline.

Tunes the two-neuron oscillator to one strike per bar at 90 BPM and
compares press duty cycles; saves a figure when matplotlib is present.
"""

import numpy as np

from pianoduet.cpg import OscillatorParams, keystroke_waveform, measure_period, sine_duty_cycle

params = OscillatorParams()
print(f"reference regime period: {measure_period(params):.3f} s")

for ck in (1, 2, 4):
    w = keystroke_waveform(params, 90.0, ck)
    print(
        f"ck={ck}: period {w.period:.3f} s, press duty {w.press_duty_cycle():.3f} "
        f"(equal-period sine: {sine_duty_cycle(0.5):.3f}), onset at "
        f"{w.onset_index * w.dt * 1e3:.0f} ms"
    )

w = keystroke_waveform(params, 90.0, 1)
t = np.arange(len(w.samples)) * w.dt
sine = w.peak * (1 + np.sin(2 * np.pi * t / w.period - np.pi / 2)) / 2

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(8, 3))
    ax.plot(t, w.samples, label="oscillator pulse")
    ax.plot(t, sine, "--", label="sine baseline")
    ax.axhline(w.threshold, color="k", lw=0.5, label="press threshold")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("vertical command")
    ax.legend(loc="upper right")
    fig.tight_layout()
    fig.savefig("keystroke_waveform.png", dpi=120)
    print("figure -> keystroke_waveform.png")
except ImportError:
    print("matplotlib not installed; skipping the figure")
