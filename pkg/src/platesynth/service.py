"""Websocket service around one RealtimeEngine.

Wire protocol, version 1: text frames are JSON objects validated
against schema/wire.schema.json; audio flows server to client as
binary frames of an 8-byte header (u32 LE sequence number, u32 LE
sample count) followed by f32 LE mono samples.  The first frame after
connect is always a status frame, never audio.

One interactive session runs at a time; concurrent connections are
refused with an error frame.  The audio context renders on a dedicated
thread paced by the wall clock and hands frames to an async writer
through a bounded drop-oldest queue whose drop count is reported in
the periodic status frames.
"""

from __future__ import annotations

import asyncio
import base64
import binascii
import json
import struct
import threading
import time
from collections import deque
from importlib import resources
from typing import Optional

import jsonschema
import numpy as np
from websockets.asyncio.server import serve as ws_serve

from .engine import (
    ControlMessage,
    EngineConfig,
    EngineError,
    Hit,
    RealtimeEngine,
    Scrape,
    SetCustomImpulse,
    SetMaterial,
    SetShape,
    SetTexture,
)
from .excitation import ScrapeState, fractal_texture
from .modal.fem import MaterialParams
from .modal.shape import ShapeGrid
from .neural.model import ModelWeights

PROTOCOL_VERSION = 1
AUDIO_HEADER = struct.Struct("<II")  # sequence number, sample count


def load_wire_schema() -> dict:
    text = (resources.files("platesynth") / "schema" / "wire.schema.json").read_text()
    return json.loads(text)


_validator = jsonschema.Draft202012Validator(load_wire_schema())


def validate_frame(obj) -> Optional[str]:
    """None if the frame matches the wire schema, else a short reason."""
    errors = sorted(_validator.iter_errors(obj), key=lambda e: len(e.absolute_path))
    if not errors:
        return None
    err = errors[-1]  # deepest path is the most specific complaint
    where = "/".join(str(p) for p in err.absolute_path) or "frame"
    return f"{where}: {err.message}"


def control_message_from_frame(obj: dict) -> ControlMessage:
    """Build the engine message for a schema-valid client frame."""
    t = obj["type"]
    if t == "shape":
        packed = base64.b64decode(obj["data"], validate=True)
        return SetShape(ShapeGrid.from_packed(packed))
    if t == "material":
        return SetMaterial(MaterialParams(
            rho=obj["rho"], E=obj["E"], nu=obj["nu"],
            alpha_R=obj["alpha_R"], beta_R=obj["beta_R"],
        ))
    if t == "hit":
        return Hit(x=obj["x"], y=obj["y"],
                   beta_K=obj.get("beta_K", 6.0),
                   amplitude=obj.get("amplitude", 1.0))
    if t == "scrape":
        return Scrape(ScrapeState(
            x=obj["x"], y=obj["y"], t=obj["t"],
            m_p=obj.get("m_p", 0.01),
            mix_v=obj.get("mix_v", 1.0),
            mix_h=obj.get("mix_h", 1.0),
        ))
    if t == "texture":
        return SetTexture(fractal_texture(
            obj["roughness"], size=obj.get("size", 256),
            seed=obj.get("seed", 0),
        ))
    if t == "impulse_custom":
        samples = obj["samples"]
        return SetCustomImpulse(None if samples is None
                                else np.asarray(samples, dtype=np.float64))
    raise ValueError(f"frame type {t!r} is not a control message")


def pack_audio_frame(seq: int, samples: np.ndarray) -> bytes:
    return AUDIO_HEADER.pack(seq, samples.shape[0]) + \
        np.asarray(samples, dtype="<f4").tobytes()


def unpack_audio_frame(frame: bytes) -> tuple[int, np.ndarray]:
    if len(frame) < AUDIO_HEADER.size:
        raise ValueError("audio frame shorter than its header")
    seq, count = AUDIO_HEADER.unpack_from(frame)
    data = np.frombuffer(frame, dtype="<f4", offset=AUDIO_HEADER.size)
    if data.shape[0] != count:
        raise ValueError(f"audio frame claims {count} samples, carries {data.shape[0]}")
    return seq, data.astype(np.float64)


class _AudioStreamer:
    """Audio context: renders blocks on a thread, queues packed frames.

    The queue is bounded; when the writer falls behind, the oldest
    frame is dropped and counted.  The engine's render path itself
    stays allocation-free; packing for the wire happens after it.
    """

    def __init__(self, engine: RealtimeEngine, loop: asyncio.AbstractEventLoop,
                 max_queued: int = 64):
        self.engine = engine
        self.loop = loop
        self.max_queued = max_queued
        self.frames: deque[bytes] = deque()
        self.lock = threading.Lock()
        self.wake = asyncio.Event()
        self.dropped = 0
        self.seq = 0
        self._stop = threading.Event()
        self._buf = np.empty(engine.config.block_size)
        self._thread = threading.Thread(target=self._run, name="audio-render",
                                        daemon=True)

    def start(self):
        self._thread.start()

    def stop(self):
        self._stop.set()
        self._thread.join(timeout=2.0)

    def drain(self) -> list[bytes]:
        with self.lock:
            out = list(self.frames)
            self.frames.clear()
        return out

    def _run(self):
        period = self.engine.config.block_size / self.engine.config.sample_rate
        next_t = time.monotonic()
        while not self._stop.is_set():
            now = time.monotonic()
            if now < next_t:
                time.sleep(min(next_t - now, period))
                continue
            self.engine.render_block(self._buf)
            frame = pack_audio_frame(self.seq, self._buf)
            self.seq += 1
            with self.lock:
                if len(self.frames) >= self.max_queued:
                    self.frames.popleft()
                    self.dropped += 1
                self.frames.append(frame)
            self.loop.call_soon_threadsafe(self.wake.set)
            next_t += period
            if now - next_t > 0.5:
                next_t = now  # resync after a long stall


class SynthService:
    """Session handling and frame plumbing for one served checkpoint."""

    def __init__(self, weights: ModelWeights,
                 engine_config: Optional[EngineConfig] = None,
                 max_queued: int = 64, status_interval: float = 1.0):
        self.weights = weights
        self.engine_config = engine_config or EngineConfig.for_weights(weights)
        self.max_queued = max_queued
        self.status_interval = status_interval
        self._busy = False

    def _status_frame(self, dropped: int) -> str:
        cfg = self.engine_config
        return json.dumps({
            "type": "status",
            "protocol": PROTOCOL_VERSION,
            "sample_rate": cfg.sample_rate,
            "block_size": cfg.block_size,
            "branches": cfg.branches,
            "cascade": cfg.cascade,
            "dropped": dropped,
        })

    @staticmethod
    async def _send_error(ws, code: str, detail: str):
        await ws.send(json.dumps({"type": "error", "code": code,
                                  "detail": detail}))

    async def handle(self, ws):
        if self._busy:
            await self._send_error(ws, "busy", "another session is active")
            return
        self._busy = True
        engine = RealtimeEngine(self.weights, self.engine_config)
        streamer = _AudioStreamer(engine, asyncio.get_running_loop(),
                                  self.max_queued)
        writer = None
        try:
            # the status frame goes out before the renderer starts, so no
            # audio frame can ever precede it
            await ws.send(self._status_frame(0))
            streamer.start()
            writer = asyncio.create_task(self._writer(ws, streamer))
            async for raw in ws:
                if isinstance(raw, (bytes, bytearray)):
                    await self._send_error(ws, "bad_message",
                                           "binary frames are server-to-client only")
                    continue
                if not await self._handle_text(ws, engine, raw):
                    break
        finally:
            if writer is not None:
                writer.cancel()
                try:
                    await writer
                except asyncio.CancelledError:
                    pass
            streamer.stop()
            self._busy = False

    async def _writer(self, ws, streamer: _AudioStreamer):
        last_status = time.monotonic()
        while True:
            try:
                await asyncio.wait_for(streamer.wake.wait(), timeout=0.1)
            except asyncio.TimeoutError:
                pass
            streamer.wake.clear()
            for frame in streamer.drain():
                await ws.send(frame)
            now = time.monotonic()
            if now - last_status >= self.status_interval:
                await ws.send(self._status_frame(streamer.dropped))
                last_status = now

    async def _handle_text(self, ws, engine: RealtimeEngine, raw: str) -> bool:
        """Apply one text frame; False ends the session (version refusal)."""
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            await self._send_error(ws, "bad_message", f"not JSON: {exc}")
            return True
        reason = validate_frame(obj)
        if reason is not None:
            await self._send_error(ws, "bad_message", reason)
            return True
        kind = obj["type"]
        if kind == "status":
            if obj.get("protocol") != PROTOCOL_VERSION:
                await self._send_error(
                    ws, "version_mismatch",
                    f"server speaks protocol {PROTOCOL_VERSION}")
                return False
            return True
        if kind == "error":
            await self._send_error(ws, "bad_message",
                                   "error frames are server-to-client only")
            return True
        try:
            engine.control_step(control_message_from_frame(obj))
        except EngineError as exc:
            await self._send_error(ws, "bad_state", str(exc))
        except (ValueError, binascii.Error) as exc:
            await self._send_error(ws, "bad_message", str(exc))
        return True


async def run_service(weights: ModelWeights, host: str = "127.0.0.1",
                      port: int = 8765,
                      engine_config: Optional[EngineConfig] = None,
                      ready: Optional[asyncio.Event] = None,
                      announce: bool = False):
    """Serve until cancelled; sets ready once the socket is listening.

    With announce, prints the bound address (resolving port 0 to the
    actual ephemeral port) so callers can scrape it.
    """
    service = SynthService(weights, engine_config)
    async with ws_serve(service.handle, host, port) as server:
        if announce:
            bound = server.sockets[0].getsockname()[1]
            print(f"listening on ws://{host}:{bound}", flush=True)
        if ready is not None:
            ready.set()
        await server.serve_forever()
