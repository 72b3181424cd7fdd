/** Scrolling spectrogram model fed by raw audio samples.
 *
 * Produces dB columns ready for a canvas painter; holds no DOM state.
 */

import { hannWindow, spectrumDb } from "./fft.js";

export class SpectrogramModel {
  readonly nFft: number;
  readonly hop: number;
  private window: Float64Array;
  private pending: Float64Array;
  private filled = 0;

  constructor(nFft = 1024, hop = 512) {
    if (hop > nFft) throw new Error("hop must not exceed nFft");
    this.nFft = nFft;
    this.hop = hop;
    this.window = hannWindow(nFft);
    this.pending = new Float64Array(nFft);
  }

  /** Feed samples; returns zero or more finished dB columns. */
  feed(samples: Float32Array): Float64Array[] {
    const out: Float64Array[] = [];
    let offset = 0;
    while (offset < samples.length) {
      const take = Math.min(this.nFft - this.filled, samples.length - offset);
      this.pending.set(samples.subarray(offset, offset + take), this.filled);
      this.filled += take;
      offset += take;
      if (this.filled === this.nFft) {
        out.push(spectrumDb(this.pending, this.window));
        this.pending.copyWithin(0, this.hop);
        this.filled = this.nFft - this.hop;
      }
    }
    return out;
  }
}

/** Map a dB column to 8-bit brightness for painting. */
export function columnToBytes(
  col: Float64Array,
  floorDb = -100,
  ceilDb = 0,
): Uint8ClampedArray {
  const out = new Uint8ClampedArray(col.length);
  const span = ceilDb - floorDb;
  for (let i = 0; i < col.length; i++) {
    out[i] = Math.round(((col[i] - floorDb) / span) * 255);
  }
  return out;
}
