"""Breakpoint schedules for parameter modulation.

A schedule maps time to overrides for any subset of the material fields
and the excitation position.  Values interpolate linearly between
breakpoints and hold at the ends, so evaluation is defined for all t.
"""

from __future__ import annotations

import numpy as np

from .modal.fem import MaterialParams

SCHEDULE_KEYS = ("rho", "E", "nu", "alpha_R", "beta_R", "x", "y")


class ModulationSchedule:
    """Per-key breakpoint lists [(t, value), ...] with increasing t."""

    def __init__(self, breakpoints: dict[str, list[tuple[float, float]]]):
        clean: dict[str, tuple[np.ndarray, np.ndarray]] = {}
        for key, pts in breakpoints.items():
            if key not in SCHEDULE_KEYS:
                raise ValueError(f"unknown schedule key {key!r}")
            if not pts:
                continue
            times = np.asarray([p[0] for p in pts], dtype=np.float64)
            values = np.asarray([p[1] for p in pts], dtype=np.float64)
            if np.any(times < 0):
                raise ValueError(f"negative breakpoint time for {key!r}")
            if np.any(np.diff(times) <= 0):
                raise ValueError(f"breakpoint times for {key!r} must increase")
            if not np.all(np.isfinite(values)):
                raise ValueError(f"non-finite breakpoint value for {key!r}")
            clean[key] = (times, values)
        self._curves = clean

    @property
    def keys(self) -> tuple[str, ...]:
        return tuple(self._curves)

    @property
    def end_time(self) -> float:
        if not self._curves:
            return 0.0
        return max(float(t[-1]) for t, _ in self._curves.values())

    def value(self, key: str, t: float, default: float) -> float:
        curve = self._curves.get(key)
        if curve is None:
            return default
        times, values = curve
        return float(np.interp(t, times, values))

    def material_at(self, t: float, base: MaterialParams) -> MaterialParams:
        return MaterialParams(
            rho=self.value("rho", t, base.rho),
            E=self.value("E", t, base.E),
            nu=self.value("nu", t, base.nu),
            alpha_R=self.value("alpha_R", t, base.alpha_R),
            beta_R=self.value("beta_R", t, base.beta_R),
        )

    def position_at(self, t: float, base: tuple[float, float]) -> tuple[float, float]:
        return (self.value("x", t, base[0]), self.value("y", t, base[1]))

    @classmethod
    def constant(cls) -> "ModulationSchedule":
        return cls({})

    @classmethod
    def ramp(cls, key: str, t0: float, v0: float, t1: float, v1: float
             ) -> "ModulationSchedule":
        return cls({key: [(t0, v0), (t1, v1)]})
