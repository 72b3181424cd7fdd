"""Real-time synthesis core.

Control-rate messages drive network inference and publish complete
coefficient sets to the audio context through a single latest-wins
mailbox slot; the audio context mixes queued excitation into the input
stream and filters it one block at a time without allocating or
blocking.  The same engine renders modulation schedules offline, one
inference per control tick, for analysis and figure generation.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .excitation import (
    ImpulseSpec,
    ScrapeState,
    SurfaceTexture,
    draw_impulse,
    kaiser_impulse,
    scrape_force,
)
from .kernels import linear_crossfade, ring_consume, ring_mix
from .modal.fem import MaterialParams
from .modal.shape import ShapeGrid
from .neural.model import ModelWeights, encode, predict
from .neural.normalize import normalize_material
from .resonator import (
    FilterBank,
    FilterState,
    map_raw_to_coeffs,
    process_block,
)
from .schedule import ModulationSchedule

# a scrape gap longer than this restarts the gesture instead of
# synthesizing a quarter second of interpolated rubbing
MAX_SCRAPE_GAP = 0.25


class EngineError(RuntimeError):
    """A control operation the engine cannot honor in its current state."""


# ---------------------------------------------------------------------------
# Control messages
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SetShape:
    grid: ShapeGrid


@dataclass(frozen=True)
class SetMaterial:
    material: MaterialParams


@dataclass(frozen=True)
class Hit:
    """Strike at a position; excitation is a kaiser window of beta_K
    unless a custom impulse has been set."""

    x: float
    y: float
    beta_K: float = 6.0
    amplitude: float = 1.0

    def __post_init__(self):
        vals = (self.x, self.y, self.beta_K, self.amplitude)
        if not all(np.isfinite(v) for v in vals):
            raise ValueError("hit fields must be finite")
        if self.beta_K < 0:
            raise ValueError("beta_K must be >= 0")


@dataclass(frozen=True)
class Scrape:
    state: ScrapeState


@dataclass(frozen=True)
class SetTexture:
    texture: SurfaceTexture


@dataclass(frozen=True)
class SetCustomImpulse:
    """Replace the hit excitation with a drawn waveform (peak-normalized);
    None reverts to the kaiser window."""

    samples: Optional[np.ndarray]


ControlMessage = Union[SetShape, SetMaterial, Hit, Scrape, SetTexture,
                       SetCustomImpulse]


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EngineConfig:
    """Rates and bank dimensions.

    One control tick spans sample_rate/control_rate samples, so the
    control rate must not exceed the sample rate; ticks need not align
    with blocks (the audio side applies updates at block boundaries).
    """

    sample_rate: float = 44100.0
    block_size: int = 256
    control_rate: float = 1000.0
    branches: int = 32
    cascade: int = 1
    crossfade_blocks: int = 1

    def __post_init__(self):
        if self.sample_rate <= 0 or self.control_rate <= 0:
            raise ValueError("rates must be positive")
        if self.block_size < 1 or self.branches < 1 or self.cascade < 1:
            raise ValueError("block_size, branches and cascade must be >= 1")
        if self.crossfade_blocks < 0:
            raise ValueError("crossfade_blocks must be >= 0")
        if self.control_rate > self.sample_rate:
            raise ValueError("control_rate must not exceed sample_rate")

    @classmethod
    def for_weights(cls, weights: ModelWeights, **kw) -> "EngineConfig":
        h = weights.hyper
        kw.setdefault("sample_rate", h.sample_rate)
        kw.setdefault("branches", h.branches)
        kw.setdefault("cascade", h.cascade)
        return cls(**kw)


@dataclass(frozen=True)
class CoefficientLog:
    """One coefficient snapshot per control tick of an offline render."""

    times: np.ndarray    # (T,) seconds
    coeffs: np.ndarray   # (T, L, M, 5) ordered [g, b1, b2, a1, a2]
    sample_rate: float
    control_rate: float


@dataclass(frozen=True)
class PositionSweep:
    """Per-step section statistics along a straight line of positions."""

    axis: str
    positions: np.ndarray          # (S,) swept coordinate in [0, 1]
    inside: np.ndarray             # (S,) bool, position lands on the shape
    mean_abs_gain: np.ndarray      # (S,)
    mean_zero_radius: np.ndarray   # (S,)
    mean_pole_radius: np.ndarray   # (S,)
    step_delta: np.ndarray         # (S,) ||coeffs[i]-coeffs[i-1]||, 0 first
    coeffs: np.ndarray             # (S, L, M, 5)

    def crossings(self) -> np.ndarray:
        """Step indices whose endpoints straddle the shape boundary."""
        return np.nonzero(self.inside[1:] != self.inside[:-1])[0] + 1

    def boundary_ratio(self) -> float:
        """Largest step change relative to the median interior step.

        Interior steps are those with both endpoints inside the shape.
        A ratio near 1 means crossing the boundary is no rougher than
        moving around inside it.
        """
        steps = self.step_delta[1:]
        interior = steps[self.inside[1:] & self.inside[:-1]]
        if interior.size == 0 or float(np.median(interior)) == 0.0:
            return float("inf") if steps.size and steps.max() > 0 else 0.0
        return float(steps.max() / np.median(interior))


def _mean_root_radius(c1: np.ndarray, c2: np.ndarray) -> np.ndarray:
    """Mean |root| of z^2 + c1 z + c2 over trailing axes; keeps axis 0."""
    disc = np.sqrt(c1.astype(complex) ** 2 - 4.0 * c2)
    r1 = np.abs(-c1 + disc)
    r2 = np.abs(-c1 - disc)
    per = (r1 + r2) / 4.0  # half-sum of the two radii, each root halved
    return per.reshape(per.shape[0], -1).mean(axis=1)


# ---------------------------------------------------------------------------
# Engine
# ---------------------------------------------------------------------------

class RealtimeEngine:
    """Single-voice engine shared by the service, the CLI and the tests.

    Exactly two logical contexts touch an instance: a control context
    (control_step, render_offline, sweep_position) and an audio context
    (render_block).  The audio side never blocks and never waits: it
    reads the newest complete FilterBank from the mailbox slot at block
    boundaries and keeps the last one on starvation.  Filter state is
    preserved across coefficient swaps so ringing tails survive shape
    and material changes.
    """

    def __init__(self, weights: Optional[ModelWeights] = None,
                 config: Optional[EngineConfig] = None,
                 texture: Optional[SurfaceTexture] = None):
        if config is None:
            config = (EngineConfig.for_weights(weights) if weights is not None
                      else EngineConfig())
        if weights is not None:
            h = weights.hyper
            if (h.branches, h.cascade) != (config.branches, config.cascade):
                raise ValueError(
                    f"model bank ({h.branches}, {h.cascade}) does not match "
                    f"engine config ({config.branches}, {config.cascade})"
                )
            if h.sample_rate != config.sample_rate:
                raise ValueError("model and engine sample rates differ")
        self.config = config
        self.weights = weights

        # control-side state
        self._grid: Optional[ShapeGrid] = None
        self._latent: Optional[np.ndarray] = None       # (1, d_lat)
        self._material = MaterialParams.default()
        self._phi = normalize_material(self._material)[None]
        self._position = np.array([[0.5, 0.5]])
        self._texture = texture
        self._custom_impulse: Optional[np.ndarray] = None
        self._scrape_prev: Optional[ScrapeState] = None
        self._scrape_write = 0
        self.encode_calls = 0
        self.predict_calls = 0
        self.dropped_events = 0

        # handoff: the mailbox holds one immutable (version, bank) pair;
        # the control side replaces the whole tuple, the audio side reads
        # it once per block, so partial coefficient sets are unobservable
        self._mailbox: tuple[int, Optional[FilterBank]] = (0, None)
        self._version = 0

        # audio-side state (owned by render_block)
        L, M, B = config.branches, config.cascade, config.block_size
        self._seen = 0
        self._bank: Optional[FilterBank] = None
        self._old_bank: Optional[FilterBank] = None
        self._state = FilterState(L, M)
        self._old_state = FilterState(L, M)
        self._xfade_left = 0
        self._ring = np.zeros(1 << max(16, (16 * B - 1).bit_length()))
        self._read_pos = 0
        self._samples_rendered = 0
        self._in_buf = np.empty(B)
        self._scratch = np.empty(B)
        self._mix_old = np.empty(B)
        self._mix_new = np.empty(B)

    # -- public state views ------------------------------------------------

    @property
    def grid(self) -> Optional[ShapeGrid]:
        return self._grid

    @property
    def material(self) -> MaterialParams:
        return self._material

    @property
    def position(self) -> tuple[float, float]:
        return (float(self._position[0, 0]), float(self._position[0, 1]))

    @property
    def texture(self) -> Optional[SurfaceTexture]:
        return self._texture

    @property
    def current_bank(self) -> Optional[FilterBank]:
        return self._mailbox[1]

    @property
    def samples_rendered(self) -> int:
        return self._samples_rendered

    # -- control context -----------------------------------------------------

    def control_step(self, msg: ControlMessage) -> Optional[FilterBank]:
        """Apply one control message; returns the published bank, if any.

        SetShape runs the encoder and one prediction; Hit, Scrape and
        SetMaterial reuse the cached shape latent and run one prediction
        each.  Hit and Scrape additionally queue excitation.  SetTexture
        and SetCustomImpulse only update control state.
        """
        if self.weights is None:
            raise EngineError("no model loaded")
        if isinstance(msg, SetShape):
            self._grid = msg.grid
            self._latent = encode(self.weights, msg.grid.cells)
            self.encode_calls += 1
            self._scrape_prev = None
            return self._publish()
        if isinstance(msg, SetMaterial):
            self._material = msg.material
            self._phi = normalize_material(msg.material)[None]
            return self._publish() if self._latent is not None else None
        if isinstance(msg, Hit):
            self._require_shape()
            self._flag_outside(msg.x, msg.y)
            self._position = np.array([[msg.x, msg.y]])
            bank = self._publish()
            self._queue_hit(msg)
            return bank
        if isinstance(msg, Scrape):
            self._require_shape()
            return self._handle_scrape(msg.state)
        if isinstance(msg, SetTexture):
            self._texture = msg.texture
            self._scrape_prev = None
            return None
        if isinstance(msg, SetCustomImpulse):
            self._custom_impulse = (None if msg.samples is None
                                    else draw_impulse(msg.samples))
            return None
        raise EngineError(f"unknown control message {type(msg).__name__}")

    def _require_shape(self):
        if self._latent is None:
            raise EngineError("no shape set")

    @staticmethod
    def _flag_outside(x: float, y: float):
        if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
            warnings.warn(
                f"interaction position ({x:.3f}, {y:.3f}) outside the unit "
                "square", stacklevel=3
            )

    def _publish(self) -> FilterBank:
        raw = predict(self.weights, self._latent, self._position, self._phi)
        self.predict_calls += 1
        bank = FilterBank(map_raw_to_coeffs(raw[0]), self.config.sample_rate)
        self._version += 1
        self._mailbox = (self._version, bank)
        return bank

    def _queue_hit(self, hit: Hit):
        if self._custom_impulse is None:
            pulse = kaiser_impulse(ImpulseSpec(beta_K=hit.beta_K,
                                               amplitude=hit.amplitude))
        else:
            pulse = hit.amplitude * self._custom_impulse
        self._mix_event(self._samples_rendered, pulse)

    def _handle_scrape(self, state: ScrapeState) -> FilterBank:
        self._flag_outside(state.x, state.y)
        self._position = np.array([[state.x, state.y]])
        bank = self._publish()
        prev = self._scrape_prev
        fresh = (prev is None or state.t <= prev.t
                 or state.t - prev.t > MAX_SCRAPE_GAP)
        if fresh:
            self._scrape_write = self._samples_rendered
        elif self._texture is not None:
            force = scrape_force(self._texture, (prev, state),
                                 self.config.sample_rate)
            if self._scrape_write < self._samples_rendered:
                # audio outran the gesture; skip ahead to the present
                self._scrape_write = self._samples_rendered
            if force.shape[0]:
                self._mix_event(self._scrape_write, force)
                self._scrape_write += force.shape[0]
        self._scrape_prev = state
        return bank

    def _mix_event(self, start: int, data: np.ndarray):
        headroom = self._ring.shape[0] - self.config.block_size
        if start + data.shape[0] - self._samples_rendered > headroom:
            self.dropped_events += 1
            return
        ring_mix(self._ring, start, data)

    # -- audio context -------------------------------------------------------

    def render_block(self, out: Optional[np.ndarray] = None) -> np.ndarray:
        """Render one block into out (allocation-free when provided).

        Consumes queued excitation, applies the newest published bank
        (swapping at the block boundary, preserving filter state), and
        crossfades the output over crossfade_blocks after a swap.
        """
        cfg = self.config
        if out is None:
            out = np.empty(cfg.block_size)
        mb = self._mailbox
        if mb[0] != self._seen:
            self._seen = mb[0]
            if self._bank is not None and cfg.crossfade_blocks > 0:
                self._old_bank = self._bank
                np.copyto(self._old_state.z, self._state.z)
                self._xfade_left = cfg.crossfade_blocks
            self._bank = mb[1]
        self._read_pos = ring_consume(self._ring, self._read_pos, self._in_buf)
        self._samples_rendered += cfg.block_size
        if self._bank is None:
            out[:] = 0.0
        elif self._xfade_left > 0:
            process_block(self._old_bank, self._old_state, self._in_buf,
                          self._mix_old, self._scratch)
            process_block(self._bank, self._state, self._in_buf,
                          self._mix_new, self._scratch)
            k = cfg.crossfade_blocks
            j = k - self._xfade_left
            linear_crossfade(self._mix_old, self._mix_new, out,
                             j / k, (j + 1) / k)
            self._xfade_left -= 1
        else:
            process_block(self._bank, self._state, self._in_buf, out,
                          self._scratch)
        return out

    # -- offline rendering -----------------------------------------------------

    def render_offline(self, schedule: ModulationSchedule,
                       excitation: Optional[np.ndarray] = None,
                       duration: float = 1.0,
                       position: Optional[tuple[float, float]] = None):
        """Deterministic schedule render, one inference per control tick.

        The schedule overrides any subset of material parameters and the
        interaction position; unscheduled keys hold the engine's current
        values (or ``position`` when given).  Excitation shorter than the
        render is zero-padded and anything past the end is discarded.  No
        crossfade is applied, so a constant schedule reproduces a
        fixed-coefficient render sample-exactly.

        Returns (audio, CoefficientLog).
        """
        if self.weights is None:
            raise EngineError("no model loaded")
        self._require_shape()
        sr = self.config.sample_rate
        spacing = sr / self.config.control_rate
        n = int(round(duration * sr))
        if n <= 0:
            raise ValueError("duration must cover at least one sample")
        if schedule.end_time > duration:
            raise ValueError(
                f"schedule runs to {schedule.end_time:g} s, past the "
                f"{duration:g} s render"
            )

        x = np.zeros(n)
        if excitation is not None:
            e = np.asarray(excitation, dtype=np.float64)
            if e.ndim != 1:
                raise ValueError("excitation must be a 1-D signal")
            m = min(n, e.shape[0])
            x[:m] = e[:m]

        L, M = self.config.branches, self.config.cascade
        n_ticks = int(np.ceil(n / spacing))
        out = np.zeros(n)
        state = FilterState(L, M)
        scratch = np.empty(int(np.ceil(spacing)) + 1)
        times = np.empty(n_ticks)
        log = np.empty((n_ticks, L, M, 5))
        base_pos = self.position if position is None else \
            (float(position[0]), float(position[1]))
        for i in range(n_ticks):
            t = i / self.config.control_rate
            mat = schedule.material_at(t, self._material)
            pos = schedule.position_at(t, base_pos)
            phi = normalize_material(mat)[None]
            raw = predict(self.weights, self._latent, [pos], phi)
            self.predict_calls += 1
            coeffs = map_raw_to_coeffs(raw[0])
            bank = FilterBank(coeffs, sr)
            times[i] = t
            log[i] = coeffs
            s0 = int(round(i * spacing))
            s1 = min(int(round((i + 1) * spacing)), n)
            if s1 > s0:
                process_block(bank, state, x[s0:s1], out[s0:s1],
                              scratch[:s1 - s0])
        return out, CoefficientLog(times=times, coeffs=log, sample_rate=sr,
                                   control_rate=self.config.control_rate)

    # -- position sweep ---------------------------------------------------------

    def sweep_position(self, axis: str = "y", steps: int = 257,
                       fixed: float = 0.5,
                       material: Optional[MaterialParams] = None
                       ) -> PositionSweep:
        """Coefficient statistics along a straight line across the window.

        Sweeps the interaction position from 0 to 1 along the chosen
        axis (the other coordinate held at ``fixed``), including points
        off the shape, and reports per-step section averages plus the
        norm of the coefficient change between neighbouring steps; the
        step deltas feed the boundary smoothness statistic.
        """
        if self.weights is None:
            raise EngineError("no model loaded")
        self._require_shape()
        if axis not in ("x", "y"):
            raise ValueError("axis must be 'x' or 'y'")
        if steps < 2:
            raise ValueError("need at least two sweep steps")
        mat = self._material if material is None else material
        u = np.linspace(0.0, 1.0, steps)
        pos = np.full((steps, 2), float(fixed))
        pos[:, 0 if axis == "x" else 1] = u
        latent = np.repeat(self._latent, steps, axis=0)
        phi = np.repeat(normalize_material(mat)[None], steps, axis=0)
        raw = predict(self.weights, latent, pos, phi)
        self.predict_calls += steps
        coeffs = map_raw_to_coeffs(raw)  # (S, L, M, 5)
        inside = np.array([self._grid.contains(px, py) for px, py in pos])
        flat = coeffs.reshape(steps, -1)
        delta = np.zeros(steps)
        delta[1:] = np.linalg.norm(np.diff(flat, axis=0), axis=1)
        return PositionSweep(
            axis=axis,
            positions=u,
            inside=inside,
            mean_abs_gain=np.abs(coeffs[..., 0]).reshape(steps, -1).mean(axis=1),
            mean_zero_radius=_mean_root_radius(coeffs[..., 1], coeffs[..., 2]),
            mean_pole_radius=_mean_root_radius(coeffs[..., 3], coeffs[..., 4]),
            step_delta=delta,
            coeffs=coeffs,
        )
