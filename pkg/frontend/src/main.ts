/** Browser wiring: websocket, keyboard + Web MIDI input, render loop. */

import { Synth } from "./audio.js";
import { KeyboardMap } from "./keyboard.js";
import { decode, ping } from "./protocol.js";
import { PianoRoll } from "./roll.js";
import { ClientSessionView } from "./view.js";

const nowSeconds = () => performance.now() / 1000;

const view = new ClientSessionView(nowSeconds);
const keys = new KeyboardMap();
const synth = new Synth();
const roll = new PianoRoll(document.getElementById("roll") as HTMLCanvasElement);

const statusEl = document.getElementById("status")!;
const chordEl = document.getElementById("chord")!;
const gaugesEl = document.getElementById("gauges")!;
const bannerEl = document.getElementById("banner")!;
const octaveEl = document.getElementById("octave")!;

const url = `ws://${location.host}/ws`;
let socket: WebSocket | null = null;
const send = (text: string) => socket?.readyState === WebSocket.OPEN && socket.send(text);

function connect(): void {
  socket = new WebSocket(url);
  view.connection = "connecting";
  socket.onopen = () => {
    view.opened();
    view.flushPending(send);
    setInterval(() => send(ping(nowSeconds())), 1000);
  };
  socket.onclose = () => {
    view.closed();
    setTimeout(connect, 1000); // the server owns all state; reconnect freely
  };
  socket.onmessage = (event) => {
    const frame = decode(String(event.data));
    if (!frame) return;
    if (frame.type === "pong") {
      view.clock.addSample(Number(frame.payload.echo ?? 0), frame.t, nowSeconds());
      return;
    }
    view.handleFrame(frame);
    if (frame.type === "strike") {
      const payload = frame.payload as { pitches: number[]; velocity: number };
      for (const pitch of payload.pitches) synth.play(pitch, payload.velocity);
    }
  };
}

// ----- local input: sound immediately, send with the corrected timestamp

const held = new Set<number>();

function pressPitch(pitch: number, velocity = 96): void {
  if (held.has(pitch)) return;
  held.add(pitch);
  synth.play(pitch, velocity);
  view.press(pitch, velocity, send);
}

function releasePitch(pitch: number): void {
  if (!held.delete(pitch)) return;
  view.release(pitch, send);
}

document.addEventListener("keydown", (event) => {
  if (event.repeat) return;
  const action = keys.resolve(event.key);
  if (action.kind === "note") pressPitch(action.pitch);
  if (action.kind === "octave") {
    keys.shiftOctave(action.delta);
    octaveEl.textContent = `octave ${keys.shift >= 0 ? "+" : ""}${keys.shift}`;
  }
});
document.addEventListener("keyup", (event) => {
  const action = keys.resolve(event.key);
  if (action.kind === "note") releasePitch(action.pitch);
});

// hardware MIDI input when the browser exposes it
if (navigator.requestMIDIAccess) {
  navigator.requestMIDIAccess().then((access) => {
    access.inputs.forEach((input) => {
      input.onmidimessage = (message: MIDIMessageEvent) => {
        const data = message.data;
        if (!data || data.length < 3) return;
        const [status, pitch, velocity] = data;
        const kind = status & 0xf0;
        if (kind === 0x90 && velocity > 0) pressPitch(pitch, velocity);
        else if (kind === 0x80 || (kind === 0x90 && velocity === 0)) releasePitch(pitch);
      };
    });
  }, () => undefined);
}

// ----- render loop

function draw(): void {
  roll.render(view.notes.all, view.serverNow(), view.barSeconds);
  statusEl.textContent =
    view.connection === "open"
      ? `connected (${view.tempoBpm} BPM, ${view.faults} faults)`
      : view.connection;
  chordEl.textContent = view.ck ? `${view.chordLabel} x${view.ck}` : "-";
  if (view.metrics) {
    gaugesEl.textContent =
      `TG ${(view.metrics.mean_tg * 1e3).toFixed(0)} ms | ` +
      `SI ${view.metrics.si.toFixed(3)} | MAE ${(view.metrics.mae * 1e3).toFixed(0)} ms`;
  }
  bannerEl.textContent = view.stalled() ? "stalled: no events for 2 bars" : view.warning;
  requestAnimationFrame(draw);
}

connect();
requestAnimationFrame(draw);
