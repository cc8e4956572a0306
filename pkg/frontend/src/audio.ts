/** Client-side synthesis for both voices; the server never streams audio.
 *
 * Each note is a two-oscillator pluck with an exponential decay envelope,
 * scheduled on the WebAudio clock.  Server-time scheduling goes through
 * the caller-provided conversion so both voices share one timebase.
 */

export class Synth {
  private ctx: AudioContext | null = null;
  private master: GainNode | null = null;

  private ensure(): AudioContext {
    if (!this.ctx) {
      this.ctx = new AudioContext();
      this.master = this.ctx.createGain();
      this.master.gain.value = 0.25;
      this.master.connect(this.ctx.destination);
    }
    if (this.ctx.state === "suspended") void this.ctx.resume();
    return this.ctx;
  }

  /** Play one pitch; when > now, `when` is in AudioContext seconds. */
  play(pitch: number, velocity: number, when = 0, seconds = 0.9): void {
    const ctx = this.ensure();
    const start = Math.max(when, ctx.currentTime);
    const freq = 440 * Math.pow(2, (pitch - 69) / 12);
    const gain = ctx.createGain();
    const level = 0.05 + 0.45 * (velocity / 127);
    gain.gain.setValueAtTime(level, start);
    gain.gain.exponentialRampToValueAtTime(1e-3, start + seconds);
    gain.connect(this.master!);

    for (const [kind, detune] of [["triangle", 0], ["sine", 3]] as const) {
      const osc = ctx.createOscillator();
      osc.type = kind;
      osc.frequency.value = freq;
      osc.detune.value = detune;
      osc.connect(gain);
      osc.start(start);
      osc.stop(start + seconds + 0.05);
    }
  }

  get currentTime(): number {
    return this.ctx ? this.ctx.currentTime : 0;
  }
}
