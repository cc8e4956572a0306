/** Session view model: everything the renderer and gauges read.
 *
 * Pure state driven by protocol frames and local key input; the DOM,
 * audio and canvas layers observe it.  The server owns all decisions --
 * reloading the page mid-session only rebuilds this object.
 */

import { ClockSync } from "./clock.js";
import { EventWindow } from "./buffers.js";
import {
  ChordPayload,
  Frame,
  HelloPayload,
  MetricsPayload,
  StrikePayload,
  noteOff,
  noteOn,
} from "./protocol.js";

export type ConnectionState = "connecting" | "open" | "closed";

export interface NoteBlock {
  t: number; // press, server session seconds
  end: number | null; // release; null while sounding
  pitch: number;
  velocity: number;
  voice: "human" | "robot";
}

export interface PendingInput {
  queuedAt: number; // client seconds
  text: string;
}

const OFFLINE_BUFFER_SECONDS = 1.0;
const ROLL_HORIZON_SECONDS = 30.0;
const STALL_BARS = 2;

export class ClientSessionView {
  connection: ConnectionState = "connecting";
  clock = new ClockSync();
  tempoBpm = 90;
  barSeconds = 60 * 4 / 90;
  clients = 0;
  chordLabel = "-";
  ck = 0;
  metrics: MetricsPayload | null = null;
  faults = 0;
  droppedInput = 0;
  warning = "";

  readonly notes = new EventWindow<NoteBlock>(ROLL_HORIZON_SECONDS);
  private activeHuman = new Map<number, NoteBlock>();
  private activeRobot: NoteBlock[] = [];
  private pending: PendingInput[] = [];
  private lastServerEventT = 0;

  constructor(private readonly now: () => number) {}

  // ----- connection -----

  opened(): void {
    this.connection = "open";
    this.warning = "";
  }

  closed(): void {
    this.connection = "closed";
  }

  /** Estimated server session time right now. */
  serverNow(): number {
    return this.clock.toServerTime(this.now());
  }

  stalled(): boolean {
    if (this.connection !== "open" || !this.clock.ready) return false;
    return this.serverNow() - this.lastServerEventT > STALL_BARS * this.barSeconds;
  }

  // ----- inbound frames -----

  handleFrame(frame: Frame): void {
    if (frame.type !== "pong") this.lastServerEventT = Math.max(this.lastServerEventT, frame.t);
    switch (frame.type) {
      case "hello": {
        const p = frame.payload as unknown as HelloPayload;
        this.tempoBpm = p.tempo_bpm;
        this.barSeconds = p.bar_seconds;
        this.clients = p.clients;
        break;
      }
      case "note_on": {
        const pitch = Number(frame.payload.pitch);
        const block: NoteBlock = {
          t: frame.t,
          end: null,
          pitch,
          velocity: Number(frame.payload.velocity ?? 64),
          voice: "human",
        };
        this.activeHuman.get(pitch) && this.endHuman(pitch, frame.t);
        this.activeHuman.set(pitch, block);
        this.notes.push(block);
        break;
      }
      case "note_off":
        this.endHuman(Number(frame.payload.pitch), frame.t);
        break;
      case "strike": {
        const p = frame.payload as unknown as StrikePayload;
        for (const done of this.activeRobot) done.end = frame.t;
        this.activeRobot = p.pitches.map((pitch) => {
          const block: NoteBlock = {
            t: frame.t,
            end: null,
            pitch,
            velocity: p.velocity,
            voice: "robot",
          };
          this.notes.push(block);
          return block;
        });
        break;
      }
      case "chord": {
        const p = frame.payload as unknown as ChordPayload;
        this.chordLabel = p.label;
        this.ck = p.ck;
        break;
      }
      case "metrics":
        this.metrics = frame.payload as unknown as MetricsPayload;
        break;
      case "fault":
        this.faults += 1;
        break;
    }
    this.notes.evict(this.lastServerEventT);
  }

  private endHuman(pitch: number, t: number): void {
    const block = this.activeHuman.get(pitch);
    if (block) {
      block.end = t;
      this.activeHuman.delete(pitch);
    }
  }

  // ----- local input -----

  /** Send a keypress now, or buffer it briefly while disconnected. */
  press(pitch: number, velocity: number, send: ((text: string) => void) | null): void {
    const text = noteOn(pitch, velocity, this.serverNow());
    this.dispatch(text, send);
  }

  release(pitch: number, send: ((text: string) => void) | null): void {
    this.dispatch(noteOff(pitch, this.serverNow()), send);
  }

  private dispatch(text: string, send: ((text: string) => void) | null): void {
    if (this.connection === "open" && send) {
      send(text);
      return;
    }
    this.pending.push({ queuedAt: this.now(), text });
    this.prunePending();
    this.warning = "offline: input buffered";
  }

  /** Flush fresh buffered input after a reconnect; stale input is dropped. */
  flushPending(send: (text: string) => void): void {
    this.prunePending();
    for (const item of this.pending) send(item.text);
    this.pending = [];
    if (this.droppedInput > 0) this.warning = `${this.droppedInput} buffered inputs dropped`;
  }

  private prunePending(): void {
    const cutoff = this.now() - OFFLINE_BUFFER_SECONDS;
    const fresh = this.pending.filter((p) => p.queuedAt >= cutoff);
    this.droppedInput += this.pending.length - fresh.length;
    this.pending = fresh;
  }

  get pendingCount(): number {
    return this.pending.length;
  }
}
