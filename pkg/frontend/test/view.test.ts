import { describe, expect, it } from "vitest";

import { decode } from "../src/protocol.js";
import { ClientSessionView } from "../src/view.js";

function frame(type: string, t: number, payload: Record<string, unknown>) {
  return { type, t, payload };
}

function makeView(startClock = 0) {
  let clientNow = startClock;
  const view = new ClientSessionView(() => clientNow);
  return { view, tick: (dt: number) => (clientNow += dt) };
}

describe("session view model", () => {
  it("tracks hello parameters and chord decisions", () => {
    const { view } = makeView();
    view.handleFrame(
      frame("hello", 0, {
        tempo_bpm: 90,
        beats_per_bar: 4,
        bar_seconds: 2.6667,
        control_dt: 0.01,
        clients: 2,
      }),
    );
    expect(view.barSeconds).toBeCloseTo(2.6667);
    view.handleFrame(frame("chord", 2.5, { p: 2, label: "Am", ck: 4, tau: 14, strike_times: [] }));
    expect(view.chordLabel).toBe("Am");
    expect(view.ck).toBe(4);
  });

  it("pairs human notes and renders strikes as chord blocks", () => {
    const { view } = makeView();
    view.handleFrame(frame("note_on", 1.0, { pitch: 64, velocity: 90 }));
    view.handleFrame(frame("note_off", 1.5, { pitch: 64 }));
    view.handleFrame(frame("strike", 2.667, { pitches: [48, 52, 55], velocity: 96 }));
    const blocks = view.notes.all;
    expect(blocks).toHaveLength(4);
    expect(blocks[0]).toMatchObject({ pitch: 64, t: 1.0, end: 1.5, voice: "human" });
    expect(blocks.filter((b) => b.voice === "robot")).toHaveLength(3);
  });

  it("renders events in timestamp order within a voice", () => {
    const { view } = makeView();
    for (let i = 0; i < 20; i += 1) {
      view.handleFrame(frame("note_on", i * 0.5, { pitch: 60 + (i % 12), velocity: 80 }));
      view.handleFrame(frame("note_off", i * 0.5 + 0.4, { pitch: 60 + (i % 12) }));
    }
    const times = view.notes.all.map((b) => b.t);
    expect([...times].sort((a, b) => a - b)).toEqual(times);
  });

  it("keeps buffers bounded over long sessions (soak)", () => {
    const { view } = makeView();
    for (let i = 0; i < 100_000; i += 1) {
      const t = i * 0.05; // 5,000 seconds of traffic
      view.handleFrame(frame("note_on", t, { pitch: 60, velocity: 80 }));
      view.handleFrame(frame("note_off", t + 0.02, { pitch: 60 }));
    }
    expect(view.notes.length).toBeLessThan(5_000);
  });

  it("buffers offline input for one second then drops with a warning", () => {
    const { view, tick } = makeView(100);
    const sent: string[] = [];
    view.press(60, 90, null); // disconnected: no sender
    expect(view.pendingCount).toBe(1);
    expect(view.warning).toContain("offline");
    tick(1.5); // past the buffer horizon
    view.opened();
    view.flushPending((text) => sent.push(text));
    expect(sent).toHaveLength(0);
    expect(view.droppedInput).toBe(1);
    expect(view.warning).toContain("dropped");
  });

  it("flushes fresh offline input on reconnect", () => {
    const { view, tick } = makeView(50);
    const sent: string[] = [];
    view.press(62, 80, null);
    tick(0.3);
    view.opened();
    view.flushPending((text) => sent.push(text));
    expect(sent).toHaveLength(1);
    expect(decode(sent[0])?.payload.pitch).toBe(62);
  });

  it("raises the stalled banner after two silent bars", () => {
    const { view, tick } = makeView(0);
    view.opened();
    view.clock.addSample(0, 0, 0); // zero offset
    view.handleFrame(frame("hello", 0, {
      tempo_bpm: 90, beats_per_bar: 4, bar_seconds: 1.0, control_dt: 0.01, clients: 1,
    }));
    view.handleFrame(frame("strike", 0.5, { pitches: [48], velocity: 80 }));
    tick(1.4);
    expect(view.stalled()).toBe(false);
    tick(1.5); // now 2.9 s past the last event with 1 s bars
    expect(view.stalled()).toBe(true);
  });

  it("counts faults and stores metrics from the wire", () => {
    const { view } = makeView();
    view.handleFrame(frame("fault", 3.0, { kind: "late_strike", detail: "" }));
    view.handleFrame(frame("metrics", 4.0, { mean_tg: 0.01, si: 0.998, mae: 0.02, entropy: 1.5 }));
    expect(view.faults).toBe(1);
    expect(view.metrics?.si).toBeCloseTo(0.998);
  });
});
