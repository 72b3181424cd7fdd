"""Flat text run configuration.

Grammar, one setting per line:

    key = value        # dotted keys, values typed by the registry below
    # comment          (blank lines and '#' lines are ignored)

Every key has a default in DEFAULTS; unknown keys are rejected, as are
duplicate assignments within one file.  Values are coerced to the type
of their default: int, float, bool ("true"/"false"), or string (taken
verbatim, unquoted).  canonical() re-serializes with sorted keys and
shortest round-tripping number formatting, so parsing a canonical dump
reproduces the configuration exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Union

Value = Union[int, float, bool, str]

# every tunable default in one place; the CLI exposes all of them
DEFAULTS: dict[str, Value] = {
    "audio.sample_rate": 44100.0,
    "audio.block_size": 256,
    "engine.control_rate": 1000.0,
    "engine.crossfade_blocks": 1,
    "bank.branches": 32,
    "bank.cascade": 1,
    "model.d_lat": 64,
    "model.hidden": 256,
    "train.learning_rate": 1e-3,
    "train.final_learning_rate": 0.0,  # 0 disables the cosine decay
    "train.batch_size": 32,
    "train.steps": 2000,
    "train.seed": 0,
    "train.freq_warmup_steps": 0,
    "dataset.shapes": 1,
    "dataset.positions": 100,
    "dataset.materials": 10,
    "dataset.seed": 0,
    "dataset.n_modes": 32,
    "dataset.n_bins": 1024,
    "dataset.fmin": 20.0,
    "dataset.fmax_ratio": 0.45,
    "plate.thickness": 0.005,
    "plate.size": 0.5,
    "material.rho.min": 500.0,
    "material.rho.max": 15000.0,
    "material.E.min": 8e9,
    "material.E.max": 5e10,
    "material.nu.min": 0.1,
    "material.nu.max": 0.4,
    "material.alpha_R.min": 1.0,
    "material.alpha_R.max": 10.0,
    "material.beta_R.min": 3e-7,
    "material.beta_R.max": 2e-6,
    "render.duration": 1.0,
    "serve.host": "127.0.0.1",
    "serve.port": 8765,
}

_BOOL_WORDS = {"true": True, "false": False}


class ConfigError(ValueError):
    """Malformed configuration text, unknown key, or bad value."""


def _coerce(key: str, text: str) -> Value:
    default = DEFAULTS[key]
    text = text.strip()
    if isinstance(default, bool):
        if text not in _BOOL_WORDS:
            raise ConfigError(f"{key}: expected true or false, got {text!r}")
        return _BOOL_WORDS[text]
    if isinstance(default, int):
        try:
            return int(text)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {text!r}") from None
    if isinstance(default, float):
        try:
            return float(text)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {text!r}") from None
    if not text:
        raise ConfigError(f"{key}: empty string value")
    return text


def _format(value: Value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class RunConfig:
    values: dict

    def __getitem__(self, key: str) -> Value:
        try:
            return self.values[key]
        except KeyError:
            raise ConfigError(f"unknown config key {key!r}") from None

    def with_overrides(self, pairs: list[str]) -> "RunConfig":
        """Apply "key=value" strings on top of this configuration."""
        vals = dict(self.values)
        for pair in pairs:
            key, sep, raw = pair.partition("=")
            key = key.strip()
            if not sep:
                raise ConfigError(f"override {pair!r} is not of the form key=value")
            if key not in DEFAULTS:
                raise ConfigError(f"unknown config key {key!r}")
            vals[key] = _coerce(key, raw)
        return RunConfig(vals)

    def canonical(self) -> str:
        lines = [f"{k} = {_format(self.values[k])}" for k in sorted(self.values)]
        return "\n".join(lines) + "\n"


def default_config() -> RunConfig:
    return RunConfig(dict(DEFAULTS))


def parse_config(text: str) -> RunConfig:
    values = dict(DEFAULTS)
    seen: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        if key not in DEFAULTS:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate assignment of {key!r}")
        seen.add(key)
        values[key] = _coerce(key, value)
    return RunConfig(values)


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def save_config(config: RunConfig, path):
    Path(path).write_text(config.canonical(), encoding="utf-8")
