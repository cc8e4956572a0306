/** Computer-keyboard piano: one octave on the home row, octave shifting.
 *
 * a s d f g h j  ->  white keys C D E F G A B
 * w e   t y u    ->  black keys C# D#  F# G# A#
 * z / x shift the octave down / up within the 88-key range.
 */

const HOME_ROW: Record<string, number> = {
  a: 0, w: 1, s: 2, e: 3, d: 4, f: 5, t: 6, g: 7, y: 8, h: 9, u: 10, j: 11,
};

export const BASE_OCTAVE_START = 60; // C4
const LOWEST = 21;
const HIGHEST = 108;

export type KeyAction =
  | { kind: "note"; pitch: number }
  | { kind: "octave"; delta: number }
  | { kind: "none" };

export class KeyboardMap {
  private octaveShift = 0;

  /** Map a KeyboardEvent.key value onto a pitch or an octave action. */
  resolve(key: string): KeyAction {
    const lower = key.toLowerCase();
    if (lower === "z") return { kind: "octave", delta: -1 };
    if (lower === "x") return { kind: "octave", delta: +1 };
    const semitone = HOME_ROW[lower];
    if (semitone === undefined) return { kind: "none" };
    const pitch = BASE_OCTAVE_START + 12 * this.octaveShift + semitone;
    if (pitch < LOWEST || pitch > HIGHEST) return { kind: "none" };
    return { kind: "note", pitch };
  }

  shiftOctave(delta: number): number {
    const next = this.octaveShift + delta;
    const lowPitch = BASE_OCTAVE_START + 12 * next;
    if (lowPitch >= LOWEST && lowPitch + 11 <= HIGHEST) this.octaveShift = next;
    return this.octaveShift;
  }

  get shift(): number {
    return this.octaveShift;
  }
}
