/** Streamed-audio bookkeeping and playback scheduling.
 *
 * The scheduler is written against a tiny sink interface instead of
 * AudioContext directly so the arithmetic is testable without a
 * browser; webAudioSink adapts the real thing.
 */

import type { AudioFrame } from "./protocol.js";

export interface StreamStats {
  frames: number;
  samples: number;
  gaps: number; // sequence-number holes
  stale: number; // frames at or behind the last seen sequence
}

/** Tracks sequence continuity of incoming audio frames. */
export class FrameTracker {
  private next: number | null = null;
  readonly stats: StreamStats = { frames: 0, samples: 0, gaps: 0, stale: 0 };

  /** Returns false for stale frames the caller should drop. */
  push(frame: AudioFrame): boolean {
    if (this.next !== null && frame.seq < this.next) {
      this.stats.stale++;
      return false;
    }
    if (this.next !== null && frame.seq > this.next) {
      this.stats.gaps += frame.seq - this.next;
    }
    this.next = frame.seq + 1;
    this.stats.frames++;
    this.stats.samples += frame.samples.length;
    return true;
  }
}

export interface AudioSink {
  readonly sampleRate: number;
  now(): number;
  play(samples: Float32Array, when: number): void;
}

/** Schedules frames back to back, restarting after underruns. */
export class PlaybackScheduler {
  /** Lead time for a fresh or recovered stream, seconds. */
  readonly latency: number;
  private horizon = 0;
  underruns = 0;

  constructor(
    private sink: AudioSink,
    latency = 0.06,
  ) {
    this.latency = latency;
  }

  enqueue(samples: Float32Array): void {
    const now = this.sink.now();
    if (this.horizon <= now) {
      if (this.horizon > 0) this.underruns++; // 0 means playback never started
      this.horizon = now + this.latency;
    }
    this.sink.play(samples, this.horizon);
    this.horizon += samples.length / this.sink.sampleRate;
  }

  /** Seconds of audio queued past the current clock. */
  buffered(): number {
    return Math.max(0, this.horizon - this.sink.now());
  }
}

export function webAudioSink(ctx: AudioContext): AudioSink {
  return {
    sampleRate: ctx.sampleRate,
    now: () => ctx.currentTime,
    play(samples: Float32Array, when: number) {
      const buf = ctx.createBuffer(1, samples.length, ctx.sampleRate);
      buf.copyToChannel(samples as Float32Array<ArrayBuffer>, 0);
      const src = ctx.createBufferSource();
      src.buffer = buf;
      src.connect(ctx.destination);
      src.start(when);
    },
  };
}
