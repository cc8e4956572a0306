import { describe, expect, it } from "vitest";

import { KeyboardMap } from "../src/keyboard.js";

describe("keyboard mapping", () => {
  it("maps the home row onto the C4 octave", () => {
    const keys = new KeyboardMap();
    expect(keys.resolve("a")).toEqual({ kind: "note", pitch: 60 }); // C4
    expect(keys.resolve("w")).toEqual({ kind: "note", pitch: 61 });
    expect(keys.resolve("j")).toEqual({ kind: "note", pitch: 71 }); // B4
    expect(keys.resolve("q")).toEqual({ kind: "none" });
  });

  it("shifts octaves within the 88-key range", () => {
    const keys = new KeyboardMap();
    expect(keys.resolve("z")).toEqual({ kind: "octave", delta: -1 });
    keys.shiftOctave(1);
    expect(keys.resolve("a")).toEqual({ kind: "note", pitch: 72 });
    keys.shiftOctave(-2);
    expect(keys.resolve("a")).toEqual({ kind: "note", pitch: 48 });
    for (let i = 0; i < 10; i += 1) keys.shiftOctave(-1);
    const lowest = keys.resolve("a");
    expect(lowest.kind).toBe("note");
    if (lowest.kind === "note") expect(lowest.pitch).toBeGreaterThanOrEqual(21);
  });

  it("upper-cases map like lower-cases", () => {
    const keys = new KeyboardMap();
    expect(keys.resolve("A")).toEqual({ kind: "note", pitch: 60 });
  });
});
