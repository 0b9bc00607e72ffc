"""Duplicate search, confirmation, and localization.

Candidate anchor pairs come from a bin-wise search: tensors are bucketed
by anchor frequency bin (duplicates always align on the frequency axis)
and two tensors match when they share more than k translation-invariant
members. Candidates are confirmed by the Frobenius cosine of the dB
spectrogram slices around the two anchors, then clustered by time offset
into reported tampered segments.
"""

from __future__ import annotations

import dataclasses
import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field

import numpy as np

from .audio_io import AudioBuffer, pre_emphasize
from .constellation import NeighborhoodConfig, find_peaks
from .spectrogram import Spectrogram, StftConfig, stft
from .tensors import (
    FeatureTensor,
    TargetZoneConfig,
    encode_all,
    eliminate_singletons,
    group_tensors,
    pair_landmarks,
)

__all__ = [
    "MatchConfig",
    "MatchPair",
    "Segment",
    "ForgeryReport",
    "DetectorParams",
    "UndefinedCorrelationError",
    "binwise_match",
    "correlate",
    "confirm",
    "localize",
    "detect",
    "compare",
    "report_to_json",
]


class UndefinedCorrelationError(ValueError):
    """Slice correlation has no value (empty or zero-energy slice)."""


@dataclass(frozen=True)
class MatchConfig:
    k: int = 3                    # min shared members, exclusive
    theta: float = 0.9            # correlation confirmation threshold
    slice_width: int = 8          # frames per correlation slice
    min_cluster_size: int = 4     # pairs needed to report a segment
    offset_tolerance: int = 2     # frames, offset clustering slack
    min_separation: int = 64      # frames, intra-file self-overlap guard

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if not 0.0 < self.theta < 1.0:
            raise ValueError(f"theta must be in (0, 1), got {self.theta}")
        if self.slice_width < 2 or self.slice_width % 2:
            raise ValueError(f"slice_width must be even and >= 2, got {self.slice_width}")
        if self.min_cluster_size < 1:
            raise ValueError(f"min_cluster_size must be >= 1, got {self.min_cluster_size}")
        if self.offset_tolerance < 0:
            raise ValueError(f"offset_tolerance must be >= 0, got {self.offset_tolerance}")
        if self.min_separation < 0:
            raise ValueError(f"min_separation must be >= 0, got {self.min_separation}")


@dataclass(frozen=True)
class MatchPair:
    m: int
    n: int
    t_m: int
    t_n: int
    f_anchor: int
    overlap: int
    rho: float | None = None

    @property
    def delta(self) -> int:
        return self.t_n - self.t_m


@dataclass(frozen=True)
class Segment:
    src_start_s: float
    src_end_s: float
    dst_start_s: float
    dst_end_s: float
    offset_s: float
    pair_count: int
    mean_rho: float


@dataclass(frozen=True)
class ForgeryReport:
    verdict: bool
    segments: list[Segment]
    pairs: list[MatchPair]
    params: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class DetectorParams:
    """Bundle of every stage's configuration for one detect/compare run."""

    pre_emphasis: float = 0.97
    stft: StftConfig = field(default_factory=StftConfig)
    peaks: NeighborhoodConfig = field(default_factory=NeighborhoodConfig)
    zone: TargetZoneConfig = field(default_factory=TargetZoneConfig)
    match: MatchConfig = field(default_factory=MatchConfig)

    def __post_init__(self):
        if not 0.0 <= self.pre_emphasis < 1.0:
            raise ValueError(f"pre_emphasis must be in [0, 1), got {self.pre_emphasis}")

    def to_dict(self) -> dict:
        return {
            "pre_emphasis": self.pre_emphasis,
            "fft_size": self.stft.fft_size,
            "hop": self.stft.hop,
            "window": self.stft.window,
            "floor_db": self.stft.floor_db,
            "patch_frames": self.peaks.patch_frames,
            "patch_bins": self.peaks.patch_bins,
            "min_db": self.peaks.min_db,
            "zone_frames": self.zone.zone_frames,
            "zone_bins": self.zone.zone_bins,
            "fan_out": self.zone.fan_out,
            "k": self.match.k,
            "theta": self.match.theta,
            "slice_width": self.match.slice_width,
            "min_cluster_size": self.match.min_cluster_size,
            "offset_tolerance": self.match.offset_tolerance,
            "min_separation": self.match.min_separation,
        }


def _pair_key(p: MatchPair):
    return (p.t_m, p.t_n, p.f_anchor, p.m, p.n)


def binwise_match(tensors: list[FeatureTensor], cfg: MatchConfig) -> list[MatchPair]:
    """All tensor pairs sharing an anchor bin with more than k common
    (f_sat, dt) members, at least min_separation frames apart."""
    buckets: dict[int, list[FeatureTensor]] = defaultdict(list)
    for t in tensors:
        buckets[t.f_anchor].append(t)
    pairs: list[MatchPair] = []
    for f_anchor, bucket in buckets.items():
        bucket.sort(key=lambda t: t.t_anchor)
        for i in range(len(bucket)):
            a = bucket[i]
            for j in range(i + 1, len(bucket)):
                b = bucket[j]
                if b.t_anchor - a.t_anchor < cfg.min_separation:
                    continue
                overlap = len(a.members & b.members)
                if overlap > cfg.k:
                    pairs.append(
                        MatchPair(
                            m=a.anchor_id, n=b.anchor_id,
                            t_m=a.t_anchor, t_n=b.t_anchor,
                            f_anchor=f_anchor, overlap=overlap,
                        )
                    )
    pairs.sort(key=_pair_key)
    return pairs


def _cross_match(tensors_a, tensors_b, cfg: MatchConfig) -> list[MatchPair]:
    """Cross-file variant: only pairs spanning the two tensor sets, no
    temporal separation guard (offsets near zero are meaningful)."""
    buckets_b: dict[int, list[FeatureTensor]] = defaultdict(list)
    for t in tensors_b:
        buckets_b[t.f_anchor].append(t)
    pairs: list[MatchPair] = []
    for a in tensors_a:
        for b in buckets_b.get(a.f_anchor, ()):
            overlap = len(a.members & b.members)
            if overlap > cfg.k:
                pairs.append(
                    MatchPair(
                        m=a.anchor_id, n=b.anchor_id,
                        t_m=a.t_anchor, t_n=b.t_anchor,
                        f_anchor=a.f_anchor, overlap=overlap,
                    )
                )
    pairs.sort(key=_pair_key)
    return pairs


def _slice_rho(vals_m: np.ndarray, t_m: int, vals_n: np.ndarray, t_n: int,
               slice_width: int, floor_db: float) -> float:
    half = slice_width // 2
    lo = max(-half, -t_m, -t_n)
    hi = min(half, vals_m.shape[0] - t_m, vals_n.shape[0] - t_n)
    if hi <= lo:
        raise UndefinedCorrelationError(f"empty slice window around frames {t_m}/{t_n}")
    a = vals_m[t_m + lo:t_m + hi] - floor_db
    b = vals_n[t_n + lo:t_n + hi] - floor_db
    num = float(np.sum(a * b))
    ea = float(np.sum(a * a))
    eb = float(np.sum(b * b))
    if ea == 0.0 or eb == 0.0:
        raise UndefinedCorrelationError("zero-energy spectrogram slice")
    return min(1.0, max(-1.0, num / math.sqrt(ea * eb)))


def correlate(spec: Spectrogram, pair: MatchPair, slice_width: int) -> float:
    """Frobenius cosine of the dB slices around the two anchors.

    Slices are shifted by -floor_db so entries are non-negative; windows
    clipped by the matrix edges are trimmed to a common aligned extent.
    """
    return _slice_rho(spec.values, pair.t_m, spec.values, pair.t_n,
                      slice_width, spec.config.floor_db)


def _confirm_counted(pairs, spec_m: Spectrogram, spec_n: Spectrogram, cfg: MatchConfig):
    survivors = []
    undefined = 0
    for p in pairs:
        try:
            rho = _slice_rho(spec_m.values, p.t_m, spec_n.values, p.t_n,
                             cfg.slice_width, spec_m.config.floor_db)
        except UndefinedCorrelationError:
            undefined += 1
            continue
        if rho > cfg.theta:
            survivors.append(dataclasses.replace(p, rho=rho))
    return survivors, undefined


def confirm(pairs: list[MatchPair], spec: Spectrogram, cfg: MatchConfig) -> list[MatchPair]:
    """Keep pairs whose slice correlation exceeds theta, recording rho.

    Pairs with undefined correlation are silently dropped (detect() counts
    them in the report diagnostics).
    """
    survivors, _ = _confirm_counted(pairs, spec, spec, cfg)
    return survivors


def localize(pairs: list[MatchPair], cfg: MatchConfig, frame_rate: float) -> ForgeryReport:
    """Cluster confirmed pairs by time offset into tampered segments.

    Pairs sorted by offset merge while consecutive offsets stay within
    offset_tolerance; clusters of at least min_cluster_size pairs become
    segments whose destination is the offset-shifted source extent.
    """
    segments: list[Segment] = []
    ordered = sorted(pairs, key=lambda p: (p.delta, p.t_m))
    clusters: list[list[MatchPair]] = []
    for p in ordered:
        if clusters and p.delta - clusters[-1][-1].delta <= cfg.offset_tolerance:
            clusters[-1].append(p)
        else:
            clusters.append([p])
    for cluster in clusters:
        if len(cluster) < cfg.min_cluster_size:
            continue
        deltas = sorted(p.delta for p in cluster)
        delta = deltas[(len(deltas) - 1) // 2]
        t0 = min(p.t_m for p in cluster)
        t1 = max(p.t_m for p in cluster)
        rhos = [p.rho for p in cluster if p.rho is not None]
        segments.append(
            Segment(
                src_start_s=t0 / frame_rate,
                src_end_s=t1 / frame_rate,
                dst_start_s=(t0 + delta) / frame_rate,
                dst_end_s=(t1 + delta) / frame_rate,
                offset_s=delta / frame_rate,
                pair_count=len(cluster),
                mean_rho=float(np.mean(rhos)) if rhos else float("nan"),
            )
        )
    segments.sort(key=lambda s: (s.src_start_s, s.dst_start_s))
    return ForgeryReport(verdict=bool(segments), segments=segments, pairs=list(pairs))


def _tensor_stage(buf: AudioBuffer, params: DetectorParams):
    """Shared front half of the pipeline: buffer -> spectrogram + tensors."""
    emphasized = pre_emphasize(buf, params.pre_emphasis)
    spec = stft(emphasized, params.stft)
    pm = find_peaks(spec, params.peaks)
    landmarks = pair_landmarks(pm, params.zone)
    encoded = encode_all(landmarks, params.stft.fft_size, params.zone.zone_frames)
    return spec, pm, landmarks, encoded


def detect(buf: AudioBuffer, params: DetectorParams | None = None) -> ForgeryReport:
    """Full single-recording pipeline: spectrogram, constellation, tensors,
    bin-wise search, correlation confirmation, offset clustering."""
    params = params or DetectorParams()
    spec, pm, landmarks, encoded = _tensor_stage(buf, params)
    u = eliminate_singletons(encoded)
    tensors = group_tensors(u)
    candidates = binwise_match(tensors, params.match)
    confirmed, undefined = _confirm_counted(candidates, spec, spec, params.match)
    report = localize(confirmed, params.match, spec.frame_rate_hz)
    return dataclasses.replace(
        report,
        params={"sample_rate_hz": buf.sample_rate_hz, **params.to_dict()},
        diagnostics={
            "peak_count": len(pm),
            "landmark_count": len(landmarks),
            "tensor_count": len(tensors),
            "candidate_pairs": len(candidates),
            "confirmed_pairs": len(confirmed),
            "undefined_correlations": undefined,
        },
    )


def compare(buf_a: AudioBuffer, buf_b: AudioBuffer,
            params: DetectorParams | None = None) -> ForgeryReport:
    """Cross-recording duplication search; only pairs spanning the two
    inputs are reported (t_m from the first file, t_n from the second).

    Identical inputs short-circuit to a clean report flagged with
    diagnostics["identical_input"].
    """
    params = params or DetectorParams()
    if buf_a.sample_rate_hz != buf_b.sample_rate_hz:
        raise ValueError("compare requires both buffers at the same sample rate")
    labeled = {
        "sample_rate_hz": buf_a.sample_rate_hz,
        "file_a": buf_a.source_path,
        "file_b": buf_b.source_path,
        **params.to_dict(),
    }
    if np.array_equal(buf_a.samples, buf_b.samples):
        return ForgeryReport(
            verdict=False, segments=[], pairs=[],
            params=labeled,
            diagnostics={"identical_input": True},
        )
    spec_a, pm_a, lm_a, enc_a = _tensor_stage(buf_a, params)
    spec_b, pm_b, lm_b, enc_b = _tensor_stage(buf_b, params)
    # Duplicate elimination must see both files: a landmark unique within
    # one file still matters when its twin lives in the other file.
    counts = Counter(e.z for e in enc_a)
    counts.update(e.z for e in enc_b)
    tensors_a = group_tensors([e for e in enc_a if counts[e.z] >= 2])
    tensors_b = group_tensors([e for e in enc_b if counts[e.z] >= 2])
    candidates = _cross_match(tensors_a, tensors_b, params.match)
    confirmed, undefined = _confirm_counted(candidates, spec_a, spec_b, params.match)
    report = localize(confirmed, params.match, spec_a.frame_rate_hz)
    return dataclasses.replace(
        report,
        params=labeled,
        diagnostics={
            "peak_count": len(pm_a) + len(pm_b),
            "landmark_count": len(lm_a) + len(lm_b),
            "tensor_count": len(tensors_a) + len(tensors_b),
            "candidate_pairs": len(candidates),
            "confirmed_pairs": len(confirmed),
            "undefined_correlations": undefined,
        },
    )


def report_to_json(report: ForgeryReport) -> str:
    """Serialize a report with stable field names and ordering; times are
    rounded to 4 decimals, correlations to 6."""
    payload = {
        "verdict": report.verdict,
        "segments": [
            {
                "src_start_s": round(s.src_start_s, 4),
                "src_end_s": round(s.src_end_s, 4),
                "dst_start_s": round(s.dst_start_s, 4),
                "dst_end_s": round(s.dst_end_s, 4),
                "offset_s": round(s.offset_s, 4),
                "pair_count": s.pair_count,
                "mean_rho": round(s.mean_rho, 6),
            }
            for s in report.segments
        ],
        "pairs": [
            {
                "m": p.m,
                "n": p.n,
                "t_m": p.t_m,
                "t_n": p.t_n,
                "f_anchor": p.f_anchor,
                "overlap": p.overlap,
                "rho": None if p.rho is None else round(p.rho, 6),
            }
            for p in report.pairs
        ],
        "params": report.params,
        "diagnostics": report.diagnostics,
    }
    return json.dumps(payload, indent=2, sort_keys=True)
