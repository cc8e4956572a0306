/** Wire protocol of the live session: JSON text frames {type, t, payload}. */

export interface Frame {
  type: string;
  t: number;
  payload: Record<string, unknown>;
}

export interface HelloPayload {
  tempo_bpm: number;
  beats_per_bar: number;
  bar_seconds: number;
  control_dt: number;
  clients: number;
}

export interface ChordPayload {
  p: number;
  label: string;
  ck: number;
  tau: number;
  strike_times: number[];
}

export interface StrikePayload {
  pitches: number[];
  velocity: number;
}

export interface MetricsPayload {
  mean_tg: number;
  si: number;
  mae: number;
  entropy: number;
}

export function encode(type: string, t: number, payload: Record<string, unknown>): string {
  return JSON.stringify({ type, t, payload });
}

export function noteOn(pitch: number, velocity: number, t: number): string {
  return encode("note_on", t, { pitch, velocity });
}

export function noteOff(pitch: number, t: number): string {
  return encode("note_off", t, { pitch });
}

export function ping(clientTime: number): string {
  return encode("ping", clientTime, {});
}

/** Parse one frame; returns null for anything malformed. */
export function decode(text: string): Frame | null {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof raw !== "object" || raw === null) return null;
  const frame = raw as { type?: unknown; t?: unknown; payload?: unknown };
  if (typeof frame.type !== "string") return null;
  const t = typeof frame.t === "number" ? frame.t : 0;
  const payload =
    typeof frame.payload === "object" && frame.payload !== null
      ? (frame.payload as Record<string, unknown>)
      : {};
  return { type: frame.type, t, payload };
}
