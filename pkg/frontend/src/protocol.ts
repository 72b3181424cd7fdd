/** Wire protocol, version 1.
 *
 * Text frames are JSON objects matching wire.schema.json; audio arrives
 * as binary frames of an 8-byte header (u32 LE sequence number, u32 LE
 * sample count) followed by f32 LE mono samples.
 */

export const PROTOCOL_VERSION = 1;

export const GRID_SIZE = 64;
export const GRID_BYTES = (GRID_SIZE * GRID_SIZE) / 8;

export interface StatusFrame {
  type: "status";
  protocol: number;
  sample_rate?: number;
  block_size?: number;
  branches?: number;
  cascade?: number;
  dropped?: number;
}

export interface ShapeFrame {
  type: "shape";
  data: string; // base64 of 512 bytes, bottom row first, LSB first
}

export interface MaterialFrame {
  type: "material";
  rho: number;
  E: number;
  nu: number;
  alpha_R: number;
  beta_R: number;
}

export interface HitFrame {
  type: "hit";
  x: number;
  y: number;
  beta_K?: number;
  amplitude?: number;
}

export interface ScrapeFrame {
  type: "scrape";
  x: number;
  y: number;
  t: number;
  m_p?: number;
  mix_v?: number;
  mix_h?: number;
}

export interface TextureFrame {
  type: "texture";
  roughness: number;
  size?: number;
  seed?: number;
}

export interface ImpulseCustomFrame {
  type: "impulse_custom";
  samples: number[] | null;
}

export interface ErrorFrame {
  type: "error";
  code: "bad_message" | "bad_state" | "busy" | "version_mismatch";
  detail?: string;
}

export type TextFrame =
  | StatusFrame
  | ShapeFrame
  | MaterialFrame
  | HitFrame
  | ScrapeFrame
  | TextureFrame
  | ImpulseCustomFrame
  | ErrorFrame;

export interface AudioFrame {
  seq: number;
  samples: Float32Array;
}

const AUDIO_HEADER_BYTES = 8;

export function decodeAudioFrame(buf: ArrayBuffer): AudioFrame {
  if (buf.byteLength < AUDIO_HEADER_BYTES) {
    throw new Error(`audio frame too short: ${buf.byteLength} bytes`);
  }
  const head = new DataView(buf, 0, AUDIO_HEADER_BYTES);
  const seq = head.getUint32(0, true);
  const count = head.getUint32(4, true);
  const expected = AUDIO_HEADER_BYTES + count * 4;
  if (buf.byteLength !== expected) {
    throw new Error(
      `audio frame length ${buf.byteLength} does not match header count ${count}`,
    );
  }
  // copy out of the transport buffer so callers can hold the samples
  const samples = new Float32Array(count);
  samples.set(new Float32Array(buf, AUDIO_HEADER_BYTES, count));
  return { seq, samples };
}

export function encodeAudioFrame(frame: AudioFrame): ArrayBuffer {
  const buf = new ArrayBuffer(AUDIO_HEADER_BYTES + frame.samples.length * 4);
  const head = new DataView(buf);
  head.setUint32(0, frame.seq, true);
  head.setUint32(4, frame.samples.length, true);
  new Float32Array(buf, AUDIO_HEADER_BYTES).set(frame.samples);
  return buf;
}

/** Pack a 64x64 occupancy grid (row 0 = bottom) into the shape frame's
 *  base64 payload: row-major from the bottom row, LSB first per byte. */
export function gridToBase64(cells: Uint8Array): string {
  if (cells.length !== GRID_SIZE * GRID_SIZE) {
    throw new Error(`grid must have ${GRID_SIZE * GRID_SIZE} cells`);
  }
  const bytes = new Uint8Array(GRID_BYTES);
  for (let i = 0; i < cells.length; i++) {
    if (cells[i]) bytes[i >> 3] |= 1 << (i & 7);
  }
  let bin = "";
  for (let i = 0; i < bytes.length; i++) bin += String.fromCharCode(bytes[i]);
  return btoa(bin);
}

export function base64ToGrid(data: string): Uint8Array {
  const bin = atob(data);
  if (bin.length !== GRID_BYTES) {
    throw new Error(`shape payload must decode to ${GRID_BYTES} bytes`);
  }
  const cells = new Uint8Array(GRID_SIZE * GRID_SIZE);
  for (let i = 0; i < cells.length; i++) {
    cells[i] = (bin.charCodeAt(i >> 3) >> (i & 7)) & 1;
  }
  return cells;
}
