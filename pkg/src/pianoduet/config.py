"""Session configuration: flat key = value files with environment overrides.

Every key in the file maps onto a SessionConfig field; unknown keys are
errors.  Environment variables named PIANODUET_<KEY> (upper-case field
name) override file values, which override defaults.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, fields
from pathlib import Path

ENV_PREFIX = "PIANODUET_"


class ConfigError(ValueError):
    """Raised for unreadable config files or invalid values."""


@dataclass
class SessionConfig:
    tempo_bpm: float = 90.0
    beats_per_bar: int = 4
    beat_unit: int = 4  # the Y of the X/Y signature; informational
    checkpoint: str = ""
    mode: str = "replay"  # replay | live
    latency_budget: float = 0.013  # seconds per control cycle
    seed: int = 0
    control_dt: float = 0.010
    v_max: float = 250.0  # horizontal speed ceiling (mm/s)
    late_note_grace: float = 0.030  # seconds a stale note may trail its bar
    host: str = "127.0.0.1"
    port: int = 8765

    def __post_init__(self):
        if self.latency_budget <= 0:
            raise ConfigError("latency_budget must be positive")
        if self.tempo_bpm <= 0:
            raise ConfigError("tempo_bpm must be positive")
        if self.mode not in ("replay", "live"):
            raise ConfigError(f"mode must be 'replay' or 'live', got {self.mode!r}")
        if self.control_dt <= 0:
            raise ConfigError("control_dt must be positive")

    def hash(self) -> str:
        text = "\n".join(
            f"{f.name}={getattr(self, f.name)!r}" for f in fields(self)
        )
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def _coerce(name: str, raw: str, target_type: type):
    try:
        if target_type is bool:
            return raw.strip().lower() in ("1", "true", "yes", "on")
        return target_type(raw.strip())
    except ValueError:
        raise ConfigError(f"config key {name}: cannot parse {raw!r} as {target_type.__name__}") from None


def load_config(path: str | Path | None = None, env: dict | None = None) -> SessionConfig:
    """Defaults, overridden by a key = value file, overridden by environment."""
    env = os.environ if env is None else env
    values: dict[str, object] = {}
    types = {f.name: f.type for f in fields(SessionConfig)}
    defaults = SessionConfig()

    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, _, raw = stripped.partition("=")
            key = key.strip()
            if key not in types:
                raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
            values[key] = _coerce(key, raw, type(getattr(defaults, key)))

    for key in types:
        env_key = ENV_PREFIX + key.upper()
        if env_key in env:
            values[key] = _coerce(env_key, env[env_key], type(getattr(defaults, key)))

    return SessionConfig(**values)
