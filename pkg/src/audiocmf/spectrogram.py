"""Windowed STFT and log-magnitude spectrogram.

All downstream stages (peak picking, landmark pairing, slice correlation)
consume the dB matrix produced here. Framing is hop-aligned with no tail
padding, so frame m covers samples [m*hop, m*hop + fft_size).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio_io import AudioBuffer

__all__ = ["StftConfig", "Spectrogram", "stft", "write_csv"]

WINDOWS = ("hann", "hamming", "rect")


@dataclass(frozen=True)
class StftConfig:
    fft_size: int = 512
    hop: int = 128
    window: str = "hann"
    floor_db: float = -120.0

    def __post_init__(self):
        if self.fft_size < 2 or self.fft_size & (self.fft_size - 1):
            raise ValueError(f"fft_size must be a power of two >= 2, got {self.fft_size}")
        if not 0 < self.hop <= self.fft_size:
            raise ValueError(f"hop must be in [1, fft_size], got {self.hop}")
        if self.window not in WINDOWS:
            raise ValueError(f"window must be one of {WINDOWS}, got {self.window!r}")
        if self.floor_db >= 0:
            raise ValueError(f"floor_db must be negative, got {self.floor_db}")

    @property
    def num_bins(self) -> int:
        return self.fft_size // 2 + 1

    def window_samples(self) -> np.ndarray:
        if self.window == "hann":
            return np.hanning(self.fft_size)
        if self.window == "hamming":
            return np.hamming(self.fft_size)
        return np.ones(self.fft_size)


@dataclass(frozen=True)
class Spectrogram:
    """dB magnitude matrix, frames along axis 0, bins 0..fft_size/2 along axis 1."""

    values: np.ndarray
    config: StftConfig
    frame_rate_hz: float

    @property
    def num_frames(self) -> int:
        return self.values.shape[0]

    @property
    def num_bins(self) -> int:
        return self.values.shape[1]

    @property
    def duration_s(self) -> float:
        return self.num_frames / self.frame_rate_hz


def stft(buf: AudioBuffer, cfg: StftConfig) -> Spectrogram:
    """Compute 20*log10 |STFT| with the magnitude clamped at cfg.floor_db.

    Raises ValueError when the buffer is shorter than one analysis frame.
    """
    x = buf.samples
    L, hop = cfg.fft_size, cfg.hop
    if x.size < L:
        raise ValueError(f"need at least {L} samples for one frame, got {x.size}")
    num_frames = 1 + (x.size - L) // hop
    idx = np.arange(L)[None, :] + hop * np.arange(num_frames)[:, None]
    frames = x[idx] * cfg.window_samples()[None, :]
    mag = np.abs(np.fft.rfft(frames, axis=1))
    np.maximum(mag, 10.0 ** (cfg.floor_db / 20.0), out=mag)
    values = 20.0 * np.log10(mag)
    return Spectrogram(
        values=values,
        config=cfg,
        frame_rate_hz=buf.sample_rate_hz / hop,
    )


def write_csv(spec: Spectrogram, path) -> None:
    """Debug dump: row-major CSV, one frame per row, 6 significant digits."""
    np.savetxt(path, spec.values, fmt="%.6g", delimiter=",")
