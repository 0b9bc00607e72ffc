"""Landmark vectors and local feature tensors.

Each constellation peak acts as an anchor that is paired with up to
fan_out later peaks inside its target zone, yielding translation-invariant
(anchor bin, satellite bin, frame offset) triples. Triples are bit-packed
into integer keys, keys occurring only once are discarded (copy-move
evidence is duplicated by definition), and the survivors are grouped into
one tensor per anchor.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import NamedTuple

from .constellation import PeakMap

__all__ = [
    "TargetZoneConfig",
    "LandmarkVector",
    "EncodedLandmark",
    "FeatureTensor",
    "pair_landmarks",
    "encode",
    "decode",
    "encode_all",
    "eliminate_singletons",
    "group_tensors",
    "write_csv",
]


@dataclass(frozen=True)
class TargetZoneConfig:
    zone_frames: int = 64   # max frame offset anchor -> satellite
    zone_bins: int = 64     # max |bin difference|
    fan_out: int = 20       # max satellites per anchor

    def __post_init__(self):
        if self.zone_frames < 1:
            raise ValueError(f"zone_frames must be >= 1, got {self.zone_frames}")
        if self.zone_bins < 0:
            raise ValueError(f"zone_bins must be >= 0, got {self.zone_bins}")
        if self.fan_out < 1:
            raise ValueError(f"fan_out must be >= 1, got {self.fan_out}")


class LandmarkVector(NamedTuple):
    f_anchor: int
    f_sat: int
    dt: int
    t_anchor: int


class EncodedLandmark(NamedTuple):
    z: int
    vec: LandmarkVector


@dataclass(frozen=True)
class FeatureTensor:
    anchor_id: int
    t_anchor: int
    f_anchor: int
    members: frozenset  # of (f_sat, dt) pairs


def pair_landmarks(pm: PeakMap, zone: TargetZoneConfig) -> list[LandmarkVector]:
    """Pair each anchor with in-zone satellites, strongest first.

    Satellites are strictly later peaks (1 <= dt <= zone_frames) within
    zone_bins of the anchor bin. When a zone holds more than fan_out
    candidates, the loudest are kept (descending level, then ascending
    (dt, |bin diff|, bin) for determinism): loud satellites are the ones
    that keep their exact cell under noise, so truncation this way leaves
    the duplicated regions with identical member sets where nearest-first
    truncation would pick different noise insertions on each side. Peaks
    in the top spectrogram bin are skipped on both sides so bins fit the
    packed-key bit budget.
    """
    frames = pm.frames
    bins = pm.bins
    levels = pm.levels_db
    n = len(pm)
    max_bin = pm.source_bins - 2  # exclude Nyquist row
    out: list[LandmarkVector] = []
    for i in range(n):
        fa = int(bins[i])
        if fa > max_bin:
            continue
        ta = int(frames[i])
        candidates = []
        for j in range(i + 1, n):
            dt = int(frames[j]) - ta
            if dt > zone.zone_frames:
                break
            if dt < 1:
                continue
            fs = int(bins[j])
            if fs > max_bin:
                continue
            dbin = abs(fs - fa)
            if dbin <= zone.zone_bins:
                candidates.append((-float(levels[j]), dt, dbin, fs))
        candidates.sort()
        kept = [(dt, fs) for _lvl, dt, _dbin, fs in candidates[: zone.fan_out]]
        kept.sort()
        for dt, fs in kept:
            out.append(LandmarkVector(fa, fs, dt, ta))
    return out


def _bit_widths(fft_size: int, zone_frames: int) -> tuple[int, int]:
    # ceil(log2(x)) == (x - 1).bit_length() for x >= 2; at least 1 bit per field
    b_f = max(1, (fft_size // 2 - 1).bit_length())
    b_t = max(1, (zone_frames - 1).bit_length())
    return b_f, b_t


def encode(v: LandmarkVector, fft_size: int, zone_frames: int) -> EncodedLandmark:
    """Lossless bit-pack of (f_anchor, f_sat, dt) into one integer key.

    Key layout: f_anchor << (b_f + b_t) | f_sat << b_t | dt, with
    b_f = ceil(log2(fft_size/2)) and b_t = ceil(log2(zone_frames)).
    """
    b_f, b_t = _bit_widths(fft_size, zone_frames)
    half = fft_size // 2
    if not 0 <= v.f_anchor < half:
        raise ValueError(f"f_anchor {v.f_anchor} outside [0, {half})")
    if not 0 <= v.f_sat < half:
        raise ValueError(f"f_sat {v.f_sat} outside [0, {half})")
    if not 1 <= v.dt <= zone_frames:
        raise ValueError(f"dt {v.dt} outside [1, {zone_frames}]")
    # addition, not OR: dt may equal 2**b_t exactly, carrying into f_sat's
    # low bit; the shifted-residue decode undoes that carry
    z = (v.f_anchor << (b_f + b_t)) + (v.f_sat << b_t) + v.dt
    return EncodedLandmark(z=z, vec=v)


def decode(z: int, fft_size: int, zone_frames: int, t_anchor: int = 0) -> LandmarkVector:
    """Invert encode(). dt occupies [1, 2**b_t], so it is recovered through
    a shifted residue: when zone_frames is a power of two, dt == zone_frames
    wraps the dt field to zero and borrows one from f_sat."""
    b_f, b_t = _bit_widths(fft_size, zone_frames)
    dt = ((z - 1) & ((1 << b_t) - 1)) + 1
    rest = (z - dt) >> b_t
    f_sat = rest & ((1 << b_f) - 1)
    f_anchor = rest >> b_f
    return LandmarkVector(f_anchor, f_sat, dt, t_anchor)


def encode_all(landmarks: list[LandmarkVector], fft_size: int, zone_frames: int) -> list[EncodedLandmark]:
    return [encode(v, fft_size, zone_frames) for v in landmarks]


def eliminate_singletons(landmarks: list[EncodedLandmark]) -> list[EncodedLandmark]:
    """Keep only landmarks whose key occurs at least twice, in stable order."""
    counts = Counter(e.z for e in landmarks)
    return [e for e in landmarks if counts[e.z] >= 2]


def write_csv(landmarks: list[EncodedLandmark], path) -> None:
    """Debug dump: one (t_anchor, f_anchor, f_sat, dt, z) row per landmark."""
    with open(path, "w") as fh:
        fh.write("t_anchor,f_anchor,f_sat,dt,z\n")
        for e in landmarks:
            v = e.vec
            fh.write(f"{v.t_anchor},{v.f_anchor},{v.f_sat},{v.dt},{e.z}\n")


def group_tensors(u: list[EncodedLandmark]) -> list[FeatureTensor]:
    """Group surviving landmarks into one tensor per (t_anchor, f_anchor).

    Anchors with no surviving landmark simply never appear; anchor_id runs
    in ascending (t_anchor, f_anchor) over the compacted anchor set.
    """
    by_anchor: dict[tuple[int, int], set] = defaultdict(set)
    for e in u:
        by_anchor[(e.vec.t_anchor, e.vec.f_anchor)].add((e.vec.f_sat, e.vec.dt))
    tensors = []
    for anchor_id, (t_a, f_a) in enumerate(sorted(by_anchor)):
        tensors.append(
            FeatureTensor(
                anchor_id=anchor_id,
                t_anchor=t_a,
                f_anchor=f_a,
                members=frozenset(by_anchor[(t_a, f_a)]),
            )
        )
    return tensors
