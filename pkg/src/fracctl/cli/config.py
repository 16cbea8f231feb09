"""Run configuration: strict keys, canonical serialization, stable hash."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .. import __version__

__all__ = ["ProjectConfig", "ConfigError", "load_config"]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ProjectConfig:
    seed: int = 0
    data_dir: str = "."
    model_dir: str = "."
    spec_dir: str = "."
    # rationalization
    band: tuple[float, float] = (1e-4, 1e4)
    oustaloup_order: int = 4
    pade_order: int = 3
    # reduction
    n_starts: int = 8
    max_evals: int = 2000
    xtol: float = 1e-6
    # identification
    Ts: float = 0.1
    order_range: tuple[int, ...] = (1, 2, 3, 4)
    noise_order: int = 1
    nk: int = 0
    # synthetic data
    drop_fraction: float = 0.3
    ramp_time: float = 3.0
    total_time: float = 14.0
    noise_sigma_fraction: float = 0.005
    noise_num: tuple[float, ...] = (0.02,)
    noise_den: tuple[float, ...] = (1.0, -0.98)
    # tuning and verification
    omega_gc: float = 1.0
    omega_t: float = 100.0
    omega_s: float = 0.01
    max_restarts: int = 10
    sim_Ts: float = 0.01
    sim_t_final: float = 100.0
    # frequency grids
    bode_min: float = 1e-3
    bode_max: float = 1e3
    bode_points: int = 301
    flatness_half_decades: float = 2.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, list):
                object.__setattr__(self, f.name, tuple(v))
        lo, hi = self.band
        if not (0 < lo < hi):
            raise ConfigError("band must satisfy 0 < low < high")
        for name in ("oustaloup_order", "pade_order", "n_starts", "max_evals", "bode_points"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        for name in ("Ts", "sim_Ts", "sim_t_final", "total_time"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "ProjectConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:16]

    def meta(self) -> dict:
        return {"tool": "fracctl", "version": __version__, "config_hash": self.hash, "config": self.to_dict()}


def load_config(path: str | Path | None, seed: int | None = None) -> ProjectConfig:
    d: dict = {}
    if path is not None:
        try:
            d = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
    if seed is not None:
        d = {**d, "seed": seed}
    return ProjectConfig.from_dict(d)
