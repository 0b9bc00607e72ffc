"""WAV ingestion and time-domain preprocessing.

Decodes RIFF/WAVE files (PCM16 or IEEE float32, mono or stereo) into a
canonical mono float buffer, optionally resampling to a target rate, and
provides the pre-emphasis filter applied before spectral analysis.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

__all__ = [
    "AudioBuffer",
    "WavFormatError",
    "UnsupportedWavError",
    "EmptyAudioError",
    "load_wav",
    "save_wav",
    "pre_emphasize",
    "resample_linear",
]

INT16_SCALE = 32768.0


class WavFormatError(ValueError):
    """Malformed RIFF/WAVE container."""


class UnsupportedWavError(WavFormatError):
    """Valid container but codec/layout outside PCM16/float32 mono-stereo."""


class EmptyAudioError(ValueError):
    """File decodes to zero samples."""


@dataclass(frozen=True)
class AudioBuffer:
    """Mono sample sequence at a known rate.

    samples are float64 amplitudes in [-1, 1]; source_path is a free-form
    provenance label (file path, or a description for synthetic buffers).
    """

    samples: np.ndarray
    sample_rate_hz: int
    source_path: str = ""

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        object.__setattr__(self, "samples", samples)
        if self.sample_rate_hz <= 0:
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        if samples.ndim != 1 or samples.size < 1:
            raise EmptyAudioError("AudioBuffer requires a non-empty 1-D sample array")
        if not np.all(np.isfinite(samples)):
            raise ValueError("AudioBuffer samples must be finite")

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz

    def __len__(self) -> int:
        return self.samples.size


def _read_chunks(data: bytes):
    """Yield (chunk_id, payload) pairs from a RIFF body, honoring pad bytes."""
    pos = 0
    while pos + 8 <= len(data):
        cid = data[pos:pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        payload = data[pos + 8:pos + 8 + size]
        if len(payload) < size:
            raise WavFormatError(f"chunk {cid!r} truncated: declared {size}, got {len(payload)}")
        yield cid, payload
        pos += 8 + size + (size & 1)  # chunks are word-aligned


def load_wav(path, target_rate_hz: int) -> AudioBuffer:
    """Decode a WAV file to a mono AudioBuffer at target_rate_hz.

    Stereo is downmixed by channel mean; PCM16 samples are scaled by
    1/32768; rate mismatches are resolved by linear interpolation.
    """
    if target_rate_hz <= 0:
        raise ValueError(f"target_rate_hz must be positive, got {target_rate_hz}")
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 12 or blob[0:4] != b"RIFF" or blob[8:12] != b"WAVE":
        raise WavFormatError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    raw = None
    for cid, payload in _read_chunks(blob[12:]):
        if cid == b"fmt " and fmt is None:
            if len(payload) < 16:
                raise WavFormatError(f"{path}: fmt chunk too short ({len(payload)} bytes)")
            fmt = struct.unpack_from("<HHIIHH", payload, 0)
        elif cid == b"data" and raw is None:
            raw = payload
    if fmt is None:
        raise WavFormatError(f"{path}: missing fmt chunk")
    if raw is None:
        raise WavFormatError(f"{path}: missing data chunk")

    codec, channels, file_rate, _byte_rate, _block_align, bits = fmt
    if channels not in (1, 2):
        raise UnsupportedWavError(f"{path}: {channels} channels unsupported (need 1 or 2)")
    if codec == 1 and bits == 16:
        samples = np.frombuffer(raw[: len(raw) - len(raw) % 2], dtype="<i2").astype(np.float64)
        samples /= INT16_SCALE
    elif codec == 3 and bits == 32:
        samples = np.frombuffer(raw[: len(raw) - len(raw) % 4], dtype="<f4").astype(np.float64)
    else:
        raise UnsupportedWavError(f"{path}: codec tag {codec} / {bits}-bit unsupported")
    if samples.size == 0:
        raise EmptyAudioError(f"{path}: zero-length data chunk")

    if channels == 2:
        usable = samples[: samples.size - samples.size % 2]
        samples = usable.reshape(-1, 2).mean(axis=1)
    if samples.size == 0:
        raise EmptyAudioError(f"{path}: no complete frames in data chunk")

    if file_rate != target_rate_hz:
        samples = resample_linear(samples, file_rate, target_rate_hz)
    samples = np.clip(samples, -1.0, 1.0)
    return AudioBuffer(samples=samples, sample_rate_hz=target_rate_hz, source_path=str(path))


def save_wav(buf: AudioBuffer, path) -> None:
    """Write an AudioBuffer as a mono IEEE float32 WAV file."""
    samples = np.clip(buf.samples, -1.0, 1.0).astype("<f4")
    data = samples.tobytes()
    rate = buf.sample_rate_hz
    header = b"".join([
        b"RIFF",
        struct.pack("<I", 4 + 8 + 16 + 8 + len(data)),
        b"WAVE",
        b"fmt ",
        struct.pack("<IHHIIHH", 16, 3, 1, rate, rate * 4, 4, 32),
        b"data",
        struct.pack("<I", len(data)),
    ])
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data)


def resample_linear(samples: np.ndarray, from_rate: int, to_rate: int) -> np.ndarray:
    """Linear-interpolation resampler.

    Output length floor((n-1) * to/from) + 1, so an exact rate doubling of
    n samples gives 2n-1 samples with originals preserved at even indices.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if from_rate == to_rate:
        return samples.copy()
    n = samples.size
    if n == 1:
        return samples.copy()
    out_len = int((n - 1) * to_rate // from_rate) + 1
    positions = np.arange(out_len) * (from_rate / to_rate)
    return np.interp(positions, np.arange(n), samples)


def pre_emphasize(buf: AudioBuffer, alpha: float) -> AudioBuffer:
    """High-frequency emphasis y(n) = x(n) - alpha * x(n-1), with y(0) = x(0)."""
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"alpha must be in [0, 1), got {alpha}")
    x = buf.samples
    y = np.empty_like(x)
    y[0] = x[0]
    y[1:] = x[1:] - alpha * x[:-1]
    return AudioBuffer(samples=y, sample_rate_hz=buf.sample_rate_hz, source_path=buf.source_path)
