"""Flat runtime configuration shared by the CLI and benchmark tooling.

One key per stage parameter; persisted as plain ``key = value`` lines so a
``--print-config`` dump is itself a loadable config file. Validation
happens as a whole before any stage runs and names the offending field.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .constellation import NeighborhoodConfig
from .matcher import DetectorParams, MatchConfig
from .spectrogram import StftConfig
from .tensors import TargetZoneConfig

__all__ = ["Config", "load_config_file", "parse_overrides"]


@dataclass(frozen=True)
class Config:
    sample_rate_hz: int = 16000
    pre_emphasis: float = 0.97
    fft_size: int = 512
    hop: int = 128
    window: str = "hann"
    floor_db: float = -120.0
    patch_frames: int = 13
    patch_bins: int = 13
    min_db: float = -80.0
    zone_frames: int = 64
    zone_bins: int = 64
    fan_out: int = 20
    k: int = 3
    theta: float = 0.9
    slice_width: int = 8
    min_cluster_size: int = 4
    offset_tolerance: int = 2
    min_separation: int = 64
    crossfade_ms: float = 5.0
    seed: int = 0

    def validate(self) -> "Config":
        if self.sample_rate_hz <= 0:
            raise ValueError(f"sample_rate_hz: must be positive, got {self.sample_rate_hz}")
        if self.seed < 0:
            raise ValueError(f"seed: must be non-negative, got {self.seed}")
        if self.crossfade_ms < 0:
            raise ValueError(f"crossfade_ms: must be non-negative, got {self.crossfade_ms}")
        self.to_params()  # stage dataclasses validate their own fields
        return self

    def to_params(self) -> DetectorParams:
        return DetectorParams(
            pre_emphasis=self.pre_emphasis,
            stft=StftConfig(fft_size=self.fft_size, hop=self.hop,
                            window=self.window, floor_db=self.floor_db),
            peaks=NeighborhoodConfig(patch_frames=self.patch_frames,
                                     patch_bins=self.patch_bins, min_db=self.min_db),
            zone=TargetZoneConfig(zone_frames=self.zone_frames,
                                  zone_bins=self.zone_bins, fan_out=self.fan_out),
            match=MatchConfig(k=self.k, theta=self.theta, slice_width=self.slice_width,
                              min_cluster_size=self.min_cluster_size,
                              offset_tolerance=self.offset_tolerance,
                              min_separation=self.min_separation),
        )

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_text(self) -> str:
        return "".join(f"{key} = {value}\n" for key, value in self.to_dict().items())

    def replace(self, **changes) -> "Config":
        return dataclasses.replace(self, **changes)


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(Config)}


def _coerce(key: str, raw: str):
    if key not in _FIELD_TYPES:
        raise ValueError(f"{key}: unknown config key")
    kind = _FIELD_TYPES[key]
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        return raw
    except ValueError:
        raise ValueError(f"{key}: cannot parse {raw!r} as {kind}") from None


def parse_overrides(items: dict) -> dict:
    """Coerce a {key: raw-string} mapping to typed config values."""
    return {key: _coerce(key, str(value)) for key, value in items.items()}


def load_config_file(path, base: Config | None = None) -> Config:
    """Read ``key = value`` lines ('#' comments and blanks ignored)."""
    cfg = base or Config()
    overrides = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line.strip()!r}")
            key, raw = (part.strip() for part in text.split("=", 1))
            overrides[key] = _coerce(key, raw)
    return cfg.replace(**overrides)
