import { describe, expect, it } from "vitest";

import { fft, hannWindow, isPowerOfTwo, spectrumDb } from "../src/fft.js";

function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/** Direct O(n^2) transform used as the oracle. */
function dft(re: Float64Array, im: Float64Array) {
  const n = re.length;
  const outRe = new Float64Array(n);
  const outIm = new Float64Array(n);
  for (let k = 0; k < n; k++) {
    for (let t = 0; t < n; t++) {
      const ang = (-2 * Math.PI * k * t) / n;
      outRe[k] += re[t] * Math.cos(ang) - im[t] * Math.sin(ang);
      outIm[k] += re[t] * Math.sin(ang) + im[t] * Math.cos(ang);
    }
  }
  return { re: outRe, im: outIm };
}

describe("fft", () => {
  it("matches the direct transform on random input", () => {
    const rand = mulberry32(5);
    for (const n of [8, 64, 256]) {
      const re = new Float64Array(n);
      const im = new Float64Array(n);
      for (let i = 0; i < n; i++) {
        re[i] = rand() * 2 - 1;
        im[i] = rand() * 2 - 1;
      }
      const want = dft(re, im);
      fft(re, im);
      for (let k = 0; k < n; k++) {
        expect(re[k]).toBeCloseTo(want.re[k], 9);
        expect(im[k]).toBeCloseTo(want.im[k], 9);
      }
    }
  });

  it("puts a pure tone's energy in its own bin", () => {
    const n = 512;
    const bin = 37;
    const re = new Float64Array(n);
    const im = new Float64Array(n);
    for (let i = 0; i < n; i++) re[i] = Math.cos((2 * Math.PI * bin * i) / n);
    fft(re, im);
    const mags = Array.from(re, (_, k) => Math.hypot(re[k], im[k]));
    expect(mags[bin]).toBeCloseTo(n / 2, 6);
    const rest = mags.filter((_, k) => k !== bin && k !== n - bin);
    expect(Math.max(...rest)).toBeLessThan(1e-7);
  });

  it("preserves energy (Parseval)", () => {
    const rand = mulberry32(11);
    const n = 128;
    const re = new Float64Array(n);
    const im = new Float64Array(n);
    let time = 0;
    for (let i = 0; i < n; i++) {
      re[i] = rand() * 2 - 1;
      time += re[i] * re[i];
    }
    fft(re, im);
    let freq = 0;
    for (let k = 0; k < n; k++) freq += re[k] * re[k] + im[k] * im[k];
    expect(freq / n).toBeCloseTo(time, 9);
  });

  it("rejects non-power-of-two lengths", () => {
    expect(isPowerOfTwo(48)).toBe(false);
    const re = new Float64Array(48);
    const im = new Float64Array(48);
    expect(() => fft(re, im)).toThrow();
  });
});

describe("spectrumDb", () => {
  it("peaks at the tone bin and respects the floor", () => {
    const n = 1024;
    const bin = 100;
    const x = new Float64Array(n);
    for (let i = 0; i < n; i++) x[i] = Math.sin((2 * Math.PI * bin * i) / n);
    const db = spectrumDb(x, hannWindow(n));
    expect(db.length).toBe(n / 2);
    let best = 0;
    for (let k = 1; k < db.length; k++) if (db[k] > db[best]) best = k;
    expect(best).toBe(bin);
    // silence clamps to the floor instead of -Infinity
    const silent = spectrumDb(new Float64Array(n), hannWindow(n));
    for (const v of silent) expect(v).toBe(-100);
  });
});

describe("hannWindow", () => {
  it("is periodic-symmetric with a unit peak at the center", () => {
    const w = hannWindow(256);
    expect(w[0]).toBeCloseTo(0, 12);
    for (let i = 1; i < 128; i++) expect(w[i]).toBeCloseTo(w[256 - i], 10);
    expect(w[128]).toBeCloseTo(1, 12);
  });
});
