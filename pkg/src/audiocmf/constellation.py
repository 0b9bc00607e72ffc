"""Constellation map extraction: spectrogram cells that strictly dominate
their P x Q neighborhood and clear an absolute level gate.

Strict dominance means plateaus (e.g. floor-clamped regions) produce no
peaks; windows are clipped at the matrix edges rather than discarded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import maximum_filter

from .spectrogram import Spectrogram

__all__ = ["NeighborhoodConfig", "PeakMap", "find_peaks", "peak_density", "write_csv"]


@dataclass(frozen=True)
class NeighborhoodConfig:
    patch_frames: int = 13
    patch_bins: int = 13
    min_db: float = -80.0

    def __post_init__(self):
        for name, v in (("patch_frames", self.patch_frames), ("patch_bins", self.patch_bins)):
            if v < 1 or v % 2 == 0:
                raise ValueError(f"{name} must be an odd positive integer, got {v}")


@dataclass(frozen=True)
class PeakMap:
    """Key-points as parallel arrays sorted by (frame, bin)."""

    frames: np.ndarray
    bins: np.ndarray
    levels_db: np.ndarray
    source_frames: int
    source_bins: int

    def __len__(self) -> int:
        return self.frames.size

    def as_tuples(self) -> list[tuple[int, int, float]]:
        return list(zip(self.frames.tolist(), self.bins.tolist(), self.levels_db.tolist()))


def find_peaks(spec: Spectrogram, cfg: NeighborhoodConfig) -> PeakMap:
    """Cells strictly greater than every other cell in the centered
    patch_frames x patch_bins window, and at least cfg.min_db."""
    y = spec.values
    p, q = cfg.patch_frames, cfg.patch_bins
    if p == 1 and q == 1:
        mask = y >= cfg.min_db
    else:
        footprint = np.ones((p, q), dtype=bool)
        footprint[p // 2, q // 2] = False
        neighbor_max = maximum_filter(y, footprint=footprint, mode="constant", cval=-np.inf)
        mask = (y > neighbor_max) & (y >= cfg.min_db)
    frames, bins = np.nonzero(mask)
    return PeakMap(
        frames=frames.astype(np.int64),
        bins=bins.astype(np.int64),
        levels_db=y[frames, bins],
        source_frames=y.shape[0],
        source_bins=y.shape[1],
    )


def peak_density(pm: PeakMap, spec: Spectrogram) -> float:
    """Peaks per second over the spectrogram's span."""
    duration = spec.duration_s
    if duration <= 0:
        raise ValueError("peak density undefined for zero-duration spectrogram")
    return len(pm) / duration


def write_csv(pm: PeakMap, path) -> None:
    """Debug dump: one (frame, bin, level_db) row per peak."""
    with open(path, "w") as fh:
        fh.write("frame,bin,level_db\n")
        for frame, bin_, level in pm.as_tuples():
            fh.write(f"{frame},{bin_},{level:.6g}\n")
