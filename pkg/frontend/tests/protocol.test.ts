import { describe, expect, it } from "vitest";

import {
  GRID_BYTES,
  GRID_SIZE,
  base64ToGrid,
  decodeAudioFrame,
  encodeAudioFrame,
  gridToBase64,
} from "../src/protocol.js";
import { FrameError, parseFrame, validateFrame } from "../src/validate.js";

// packing of {(row, col): (7*row + 13*col) % 29 == 0}, computed with the
// server's own layout (row-major from the bottom row, LSB first)
const PACKED_ORACLE =
  "AQAAIAAAAAQAAAABAAAgAAAACAAAAAEAAEAAAAAIAAAAAgAAQAAAABAAAAACAABAAAAAEAAAAAIA" +
  "AIAAAAAQAAAABAAAgAAAACAAAAAEAAAAAQAAIAAAAAgAAAABAAAgAAAACAAAAAEAAEAAAAAIAAAA" +
  "AgAAQAAAABAAAAACAACAAAAAEAAAAAQAAIAAAAAQAAAABAAAgAAAACAAAAAEAAAAAQAAIAAAAAgA" +
  "AAABAABAAAAACAAAAAIAAEAAAAAIAAAAAgAAQAAAABAAAAACAACAAAAAEAAAAAQAAIAAAAAgAAAA" +
  "BAAAgAEAACAAAAAEAAAAAQAAIAAAAAgAAAABAABAAAAACAAAAAIAAEAAAAAQAAAAAgAAQAAAABAA" +
  "AAACAACAAAAAEAAAAAQAAIAAAAAgAAAABAAAAAEAACAAAAAIAAAAAQAAIAAAAAgAAAABAABAAAAA" +
  "CAAAAAIAAEAAAAAQAAAAAgAAgAAAABAAAAAEAACAAAAAEAAAAAQAAIAAAAAgAAAABAAAAAEAACAA" +
  "AAAIAAAAAQAAQAAAAAgAAAACAABAAAAACAAAAAIAAEAAAAAQAAAAAgAAgAAAABAAAAAEAACAAAAA" +
  "IAAAAAQAAIABAAAgAAAABAAAAAEAACAAAAAIAAAAAQAAQAAAAAgAAAACAABAAAAAEAAAAAIAAEA=";

describe("grid packing", () => {
  it("matches the server byte layout on a reference pattern", () => {
    const cells = new Uint8Array(GRID_SIZE * GRID_SIZE);
    for (let row = 0; row < GRID_SIZE; row++) {
      for (let col = 0; col < GRID_SIZE; col++) {
        if ((row * 7 + col * 13) % 29 === 0) cells[row * GRID_SIZE + col] = 1;
      }
    }
    expect(gridToBase64(cells)).toBe(PACKED_ORACLE);
    expect(base64ToGrid(PACKED_ORACLE)).toEqual(cells);
  });

  it("rejects wrong lengths", () => {
    expect(() => gridToBase64(new Uint8Array(100))).toThrow();
    expect(() => base64ToGrid("AAAA")).toThrow();
  });

  it("produces the schema's payload size", () => {
    const cells = new Uint8Array(GRID_SIZE * GRID_SIZE).fill(1);
    const data = gridToBase64(cells);
    expect(data).toMatch(/^[A-Za-z0-9+/]{683}=$/);
    expect(GRID_BYTES).toBe(512);
  });
});

describe("audio frame codec", () => {
  it("round-trips", () => {
    const samples = new Float32Array([0, -1, 0.5, 3.25e-5, 1]);
    const buf = encodeAudioFrame({ seq: 4242, samples });
    expect(buf.byteLength).toBe(8 + 5 * 4);
    const frame = decodeAudioFrame(buf);
    expect(frame.seq).toBe(4242);
    expect(frame.samples).toEqual(samples);
  });

  it("rejects truncated or padded buffers", () => {
    const buf = encodeAudioFrame({ seq: 1, samples: new Float32Array(16) });
    expect(() => decodeAudioFrame(buf.slice(0, 20))).toThrow(/length/);
    expect(() => decodeAudioFrame(new ArrayBuffer(3))).toThrow(/short/);
  });

  it("copies samples out of the transport buffer", () => {
    const buf = encodeAudioFrame({ seq: 0, samples: new Float32Array([1, 2]) });
    const frame = decodeAudioFrame(buf);
    new Float32Array(buf).fill(0);
    expect(frame.samples[0]).toBe(1);
  });
});

describe("frame validation", () => {
  const goodFrames = [
    { type: "status", protocol: 1 },
    { type: "status", protocol: 1, sample_rate: 44100, block_size: 256 },
    { type: "material", rho: 2700, E: 2e10, nu: 0.3, alpha_R: 5, beta_R: 1e-6 },
    { type: "hit", x: 0.5, y: 0.25 },
    { type: "hit", x: 0, y: 1, beta_K: 2, amplitude: 0.5 },
    { type: "scrape", x: 0.1, y: 0.9, t: 12.25 },
    { type: "scrape", x: 0.1, y: 0.9, t: 0, m_p: 0.01, mix_v: 1, mix_h: 0 },
    { type: "texture", roughness: 0.7 },
    { type: "texture", roughness: 0, size: 64, seed: 9 },
    { type: "impulse_custom", samples: [0.5, -0.5] },
    { type: "impulse_custom", samples: null },
    { type: "error", code: "busy" },
    { type: "error", code: "bad_message", detail: "x must be a number" },
  ];

  it.each(goodFrames)("accepts %j", (frame) => {
    expect(parseFrame(JSON.stringify(frame))).toEqual(frame);
  });

  const badFrames = [
    ["unknown type", { type: "nope" }],
    ["missing required", { type: "hit", x: 0.5 }],
    ["extra property", { type: "hit", x: 0.5, y: 0.5, z: 1 }],
    ["bad protocol", { type: "status", protocol: 0 }],
    ["roughness out of range", { type: "texture", roughness: 1.5 }],
    ["negative scrape clock", { type: "scrape", x: 0.5, y: 0.5, t: -1 }],
    ["bad error code", { type: "error", code: "kaboom" }],
    ["short shape payload", { type: "shape", data: "AAAA" }],
    ["oversized impulse", {
      type: "impulse_custom",
      samples: new Array(8193).fill(0),
    }],
    ["null material field", {
      type: "material", rho: null, E: 2e10, nu: 0.3, alpha_R: 5, beta_R: 1e-6,
    }],
  ] as const;

  it.each(badFrames)("rejects %s", (_name, frame) => {
    expect(() => validateFrame(frame)).toThrow(FrameError);
  });

  it("rejects non-JSON and non-object payloads", () => {
    expect(() => parseFrame("{not json")).toThrow(FrameError);
    expect(() => parseFrame("42")).toThrow(FrameError);
    expect(() => parseFrame('"hit"')).toThrow(FrameError);
  });

  it("accepts a real shape frame end to end", () => {
    const cells = new Uint8Array(GRID_SIZE * GRID_SIZE).fill(1);
    const frame = { type: "shape", data: gridToBase64(cells) };
    expect(parseFrame(JSON.stringify(frame))).toEqual(frame);
  });
});
