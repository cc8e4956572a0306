/** Scrolling two-voice piano roll on a 2D canvas.
 *
 * Upper voice (human) in warm colors, lower voice (robot chords) in cool
 * ones, brightness mapped from velocity; the playhead sits at 3/4 of the
 * width with the recent past scrolling off to the left.
 */

import { NoteBlock } from "./view.js";

const PITCH_LOW = 36;
const PITCH_HIGH = 96;
const WINDOW_SECONDS = 12;

function color(block: NoteBlock): string {
  const bright = 35 + Math.round(50 * (block.velocity / 127));
  return block.voice === "human"
    ? `hsl(16 85% ${bright}%)`
    : `hsl(212 80% ${bright}%)`;
}

export class PianoRoll {
  private ctx: CanvasRenderingContext2D;

  constructor(private readonly canvas: HTMLCanvasElement) {
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("canvas 2d context unavailable");
    this.ctx = ctx;
  }

  render(blocks: readonly NoteBlock[], serverNow: number, barSeconds: number): void {
    const { width, height } = this.canvas;
    const ctx = this.ctx;
    ctx.fillStyle = "#11151c";
    ctx.fillRect(0, 0, width, height);

    const t0 = serverNow - WINDOW_SECONDS * 0.75;
    const px = (t: number) => ((t - t0) / WINDOW_SECONDS) * width;
    const py = (pitch: number) =>
      height - ((pitch - PITCH_LOW) / (PITCH_HIGH - PITCH_LOW)) * height;
    const rowH = height / (PITCH_HIGH - PITCH_LOW);

    // bar lines
    ctx.strokeStyle = "#2a3140";
    ctx.lineWidth = 1;
    for (let bar = Math.floor(t0 / barSeconds); ; bar += 1) {
      const x = px(bar * barSeconds);
      if (x > width) break;
      if (x < 0) continue;
      ctx.beginPath();
      ctx.moveTo(x, 0);
      ctx.lineTo(x, height);
      ctx.stroke();
    }

    for (const block of blocks) {
      const start = px(block.t);
      const end = px(block.end ?? serverNow);
      if (end < 0 || start > width) continue;
      ctx.fillStyle = color(block);
      ctx.fillRect(start, py(block.pitch) - rowH, Math.max(2, end - start), rowH * 0.9);
    }

    // playhead
    ctx.strokeStyle = "#e8e4d8";
    ctx.beginPath();
    ctx.moveTo(px(serverNow), 0);
    ctx.lineTo(px(serverNow), height);
    ctx.stroke();
  }
}
