/** Websocket client for the synthesis service.
 *
 * Every text frame is schema-validated in both directions; validation
 * failures surface through onProtocolError rather than being silently
 * passed along.  A socket factory is injected so tests can use the ws
 * package where the browser would use WebSocket.
 */

import {
  PROTOCOL_VERSION,
  type AudioFrame,
  type ErrorFrame,
  type MaterialFrame,
  type StatusFrame,
  type TextFrame,
  decodeAudioFrame,
  gridToBase64,
} from "./protocol.js";
import { parseFrame, validateFrame } from "./validate.js";

/** The subset of WebSocket both the browser and the ws package provide. */
export interface SocketLike {
  binaryType: string;
  send(data: string | ArrayBuffer): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface ClientHooks {
  onStatus?: (s: StatusFrame) => void;
  onServerError?: (e: ErrorFrame) => void;
  onAudio?: (f: AudioFrame) => void;
  onProtocolError?: (err: Error) => void;
  onClose?: () => void;
}

export interface ClientCounts {
  sent: number;
  received: number; // validated inbound text frames
  audioFrames: number;
  invalid: number; // inbound frames that failed validation
}

export class SynthClient {
  private sock: SocketLike;
  readonly counts: ClientCounts = {
    sent: 0,
    received: 0,
    audioFrames: 0,
    invalid: 0,
  };

  constructor(
    url: string,
    private hooks: ClientHooks = {},
    factory?: SocketFactory,
  ) {
    const make: SocketFactory =
      factory ?? ((u) => new WebSocket(u) as unknown as SocketLike);
    this.sock = make(url);
    this.sock.binaryType = "arraybuffer";
    this.sock.onopen = () => {
      // announce our protocol version; the server answers or objects
      this.send({ type: "status", protocol: PROTOCOL_VERSION });
    };
    this.sock.onmessage = (ev) => this.receive(ev.data);
    this.sock.onclose = () => this.hooks.onClose?.();
  }

  private receive(data: unknown): void {
    if (typeof data === "string") {
      let frame: TextFrame;
      try {
        frame = parseFrame(data);
      } catch (err) {
        this.counts.invalid++;
        this.hooks.onProtocolError?.(err as Error);
        return;
      }
      this.counts.received++;
      if (frame.type === "status") this.hooks.onStatus?.(frame);
      else if (frame.type === "error") this.hooks.onServerError?.(frame);
      else {
        this.counts.invalid++;
        this.hooks.onProtocolError?.(
          new Error(`unexpected server frame type ${frame.type}`),
        );
      }
      return;
    }
    try {
      const frame = decodeAudioFrame(data as ArrayBuffer);
      this.counts.audioFrames++;
      this.hooks.onAudio?.(frame);
    } catch (err) {
      this.counts.invalid++;
      this.hooks.onProtocolError?.(err as Error);
    }
  }

  private send(frame: TextFrame): void {
    validateFrame(frame);
    this.sock.send(JSON.stringify(frame));
    this.counts.sent++;
  }

  sendShape(cells: Uint8Array): void {
    this.send({ type: "shape", data: gridToBase64(cells) });
  }

  sendMaterial(m: Omit<MaterialFrame, "type">): void {
    this.send({ type: "material", ...m });
  }

  sendHit(x: number, y: number, beta_K?: number, amplitude?: number): void {
    const frame: TextFrame = { type: "hit", x, y };
    if (beta_K !== undefined) frame.beta_K = beta_K;
    if (amplitude !== undefined) frame.amplitude = amplitude;
    this.send(frame);
  }

  sendScrape(
    x: number,
    y: number,
    t: number,
    extra: { m_p?: number; mix_v?: number; mix_h?: number } = {},
  ): void {
    this.send({ type: "scrape", x, y, t, ...extra });
  }

  sendTexture(roughness: number, size?: number, seed?: number): void {
    const frame: TextFrame = { type: "texture", roughness };
    if (size !== undefined) frame.size = size;
    if (seed !== undefined) frame.seed = seed;
    this.send(frame);
  }

  sendCustomImpulse(samples: number[] | null): void {
    this.send({ type: "impulse_custom", samples });
  }

  close(): void {
    this.sock.close();
  }
}
