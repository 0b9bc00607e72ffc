"""Bin-wise search, correlation confirmation, localization, detect()."""

import numpy as np
import pytest

from audiocmf.audio_io import AudioBuffer
from audiocmf.forgery_lab import ForgerySpec, make_forgery, synth_speech
from audiocmf.matcher import (
    DetectorParams,
    MatchConfig,
    MatchPair,
    UndefinedCorrelationError,
    binwise_match,
    compare,
    confirm,
    correlate,
    detect,
    localize,
)
from audiocmf.spectrogram import Spectrogram, StftConfig
from audiocmf.tensors import FeatureTensor


def tensor(anchor_id, t, f, members):
    return FeatureTensor(anchor_id=anchor_id, t_anchor=t, f_anchor=f,
                         members=frozenset(members))


def brute_force_match(tensors, cfg):
    """All-pairs restatement ignoring the frequency buckets."""
    pairs = []
    for i, a in enumerate(tensors):
        for b in tensors[i + 1:]:
            if a.f_anchor != b.f_anchor:
                continue
            lo, hi = sorted((a, b), key=lambda t: t.t_anchor)
            if hi.t_anchor - lo.t_anchor < cfg.min_separation:
                continue
            overlap = len(a.members & b.members)
            if overlap > cfg.k:
                pairs.append(MatchPair(m=lo.anchor_id, n=hi.anchor_id,
                                       t_m=lo.t_anchor, t_n=hi.t_anchor,
                                       f_anchor=a.f_anchor, overlap=overlap))
    pairs.sort(key=lambda p: (p.t_m, p.t_n, p.f_anchor, p.m, p.n))
    return pairs


def random_tensors(rng, n, f_values=8, t_max=4000, member_space=40, members_max=8):
    out = []
    for i in range(n):
        size = int(rng.integers(1, members_max + 1))
        members = {(int(rng.integers(0, 256)), int(rng.integers(1, member_space)))
                   for _ in range(size)}
        out.append(tensor(i, int(rng.integers(0, t_max)), int(rng.integers(0, f_values)), members))
    return out


def flat_spec(values, frame_rate=125.0, floor_db=-120.0):
    return Spectrogram(values=np.asarray(values, dtype=float),
                       config=StftConfig(floor_db=floor_db), frame_rate_hz=frame_rate)


# ---------------------------------------------------------------------------
# binwise_match
# ---------------------------------------------------------------------------

def test_identical_four_member_sets_match():
    members = {(10, 3), (20, 5), (30, 7), (40, 9)}
    a = tensor(0, 100, 50, members)
    b = tensor(1, 600, 50, members)
    pairs = binwise_match([a, b], MatchConfig(k=3))
    assert len(pairs) == 1
    assert pairs[0].overlap == 4
    assert (pairs[0].t_m, pairs[0].t_n) == (100, 600)


def test_overlap_must_strictly_exceed_k():
    members = {(10, 3), (20, 5), (30, 7)}
    pairs = binwise_match([tensor(0, 0, 50, members), tensor(1, 600, 50, members)],
                          MatchConfig(k=3))
    assert pairs == []


def test_different_anchor_bins_never_match():
    members = {(10, 3), (20, 5), (30, 7), (40, 9)}
    pairs = binwise_match([tensor(0, 0, 50, members), tensor(1, 600, 51, members)],
                          MatchConfig(k=3))
    assert pairs == []


def test_minimum_separation_guard():
    members = {(10, 3), (20, 5), (30, 7), (40, 9)}
    cfg = MatchConfig(k=3, min_separation=64)
    near = binwise_match([tensor(0, 100, 50, members), tensor(1, 150, 50, members)], cfg)
    far = binwise_match([tensor(0, 100, 50, members), tensor(1, 164, 50, members)], cfg)
    assert near == []
    assert len(far) == 1


@pytest.mark.parametrize("seed", range(12))
def test_binwise_equals_brute_force(seed):
    rng = np.random.default_rng(seed)
    tensors = random_tensors(rng, 100)
    cfg = MatchConfig(k=2, min_separation=50)
    assert binwise_match(tensors, cfg) == brute_force_match(tensors, cfg)


# ---------------------------------------------------------------------------
# correlate / confirm
# ---------------------------------------------------------------------------

def test_identical_slices_give_rho_one():
    rng = np.random.default_rng(3)
    block = rng.uniform(-100, -20, size=(8, 40))
    values = np.tile(block, (10, 1))  # period-8 content: frames t and t+80 identical
    spec = flat_spec(values)
    pair = MatchPair(m=0, n=1, t_m=8, t_n=72, f_anchor=0, overlap=5)
    assert correlate(spec, pair, 8) == pytest.approx(1.0, abs=1e-12)


def test_orthogonal_slices_give_rho_zero():
    values = np.full((40, 16), -120.0)
    values[8:12, 0:8] = -20.0    # energy only in low bins around t=10
    values[28:32, 8:16] = -20.0  # energy only in high bins around t=30
    spec = flat_spec(values)
    # shift by -floor_db makes untouched cells exactly zero
    pair = MatchPair(m=0, n=1, t_m=10, t_n=30, f_anchor=0, overlap=5)
    rho = correlate(spec, pair, 4)
    assert rho == pytest.approx(0.0, abs=1e-12)


def test_correlate_symmetric_and_scale_invariant():
    rng = np.random.default_rng(4)
    values = rng.uniform(-90, -10, size=(64, 30))
    spec = flat_spec(values)
    p = MatchPair(m=0, n=1, t_m=10, t_n=40, f_anchor=0, overlap=5)
    p_rev = MatchPair(m=1, n=0, t_m=40, t_n=10, f_anchor=0, overlap=5)
    assert correlate(spec, p, 8) == pytest.approx(correlate(spec, p_rev, 8), abs=1e-12)

    # scaling one slice's shifted matrix by g>0 leaves rho unchanged
    shifted = values - spec.config.floor_db
    scaled = shifted.copy()
    scaled[36:44] *= 3.7
    spec2 = flat_spec(scaled + spec.config.floor_db)
    assert correlate(spec2, p, 8) == pytest.approx(correlate(spec, p, 8), abs=1e-9)


def test_zero_energy_slice_raises():
    # every cell at the clamp floor shifts to exactly zero energy
    spec = Spectrogram(values=np.full((40, 10), -120.0), config=StftConfig(),
                       frame_rate_hz=125.0)
    pair = MatchPair(m=0, n=1, t_m=10, t_n=30, f_anchor=0, overlap=5)
    with pytest.raises(UndefinedCorrelationError):
        correlate(spec, pair, 8)


def test_edge_clipping_trims_to_common_window():
    rng = np.random.default_rng(5)
    values = rng.uniform(-90, -10, size=(20, 12))
    spec = flat_spec(values)
    pair = MatchPair(m=0, n=1, t_m=1, t_n=18, f_anchor=0, overlap=5)
    rho = correlate(spec, pair, 8)  # both windows clipped, same aligned length
    assert -1.0 <= rho <= 1.0


def test_confirm_threshold_semantics():
    rng = np.random.default_rng(6)
    block = rng.uniform(-100, -20, size=(8, 40))
    values = np.vstack([np.tile(block, (4, 1)), rng.uniform(-100, -20, size=(40, 40))])
    spec = flat_spec(values)
    dup = MatchPair(m=0, n=1, t_m=8, t_n=24, f_anchor=0, overlap=5)      # identical slices
    unrelated = MatchPair(m=2, n=3, t_m=8, t_n=48, f_anchor=0, overlap=5)
    cfg = MatchConfig(k=3, theta=0.9, min_separation=0)
    kept = confirm([dup, unrelated], spec, cfg)
    assert [p.rho is not None for p in kept] == [True] * len(kept)
    assert dup.m in [p.m for p in kept]
    rho_unrelated = correlate(spec, unrelated, cfg.slice_width)
    assert (unrelated.m in [p.m for p in kept]) == (rho_unrelated > 0.9)


def test_confirm_monotone_in_k_and_theta(params, forged_corpus):
    buf, _ = forged_corpus[0]
    base = detect(buf, params)
    stricter_k = DetectorParams(match=MatchConfig(k=5))
    stricter_t = DetectorParams(match=MatchConfig(theta=0.99))
    rep_k = detect(buf, stricter_k)
    rep_t = detect(buf, stricter_t)

    def key_set(report):
        return {(p.t_m, p.t_n, p.f_anchor) for p in report.pairs}

    assert key_set(rep_k) <= key_set(base)
    assert key_set(rep_t) <= key_set(base)


# ---------------------------------------------------------------------------
# localize
# ---------------------------------------------------------------------------

def test_localize_empty():
    report = localize([], MatchConfig(), 125.0)
    assert report.verdict is False
    assert report.segments == []


def test_localize_single_cluster_arithmetic():
    pairs = []
    rng = np.random.default_rng(7)
    for i in range(10):
        t_m = int(rng.integers(100, 181))
        delta = 250 + int(rng.integers(-1, 2))
        pairs.append(MatchPair(m=i, n=100 + i, t_m=t_m, t_n=t_m + delta,
                               f_anchor=10, overlap=5, rho=0.99))
    pairs.sort(key=lambda p: p.t_m)
    t_lo = min(p.t_m for p in pairs)
    t_hi = max(p.t_m for p in pairs)
    report = localize(pairs, MatchConfig(), 125.0)
    assert report.verdict is True
    assert len(report.segments) == 1
    seg = report.segments[0]
    assert seg.pair_count == 10
    assert seg.offset_s * 125.0 == pytest.approx(250, abs=1)
    assert seg.src_start_s == pytest.approx(t_lo / 125.0)
    assert seg.src_end_s == pytest.approx(t_hi / 125.0)
    assert seg.dst_start_s - seg.src_start_s == pytest.approx(seg.offset_s, abs=1e-9)


def test_localize_discards_small_clusters():
    pairs = [MatchPair(m=i, n=10 + i, t_m=100 + i, t_n=600 + i, f_anchor=3,
                       overlap=4, rho=0.95) for i in range(3)]
    report = localize(pairs, MatchConfig(min_cluster_size=4), 125.0)
    assert report.verdict is False


def test_localize_synthetic_forgery_offsets():
    """0.8 s copied from 2.0 s to 6.0 s: offset must land within one hop of
    4.0 s. Extents are anchor-evidence extents: the start tracks the first
    matched anchor; the end structurally stops short of the splice because
    an anchor near the copy end has its whole satellite zone beyond it."""
    buf = synth_speech(10.0, seed=14)
    forged, truth = make_forgery(buf, ForgerySpec(src_start_s=2.0, duration_s=0.8,
                                                  dst_start_s=6.0))
    report = detect(forged)
    assert report.verdict is True
    seg = max(report.segments, key=lambda s: s.pair_count)
    hop_s = 128 / 16000
    assert abs(seg.offset_s - 4.0) <= hop_s
    assert 2.0 - 2 * hop_s <= seg.src_start_s <= 2.0 + 2 * hop_s
    assert 2.8 - 0.35 <= seg.src_end_s <= 2.8 + 2 * hop_s
    assert abs(seg.dst_start_s - 6.0) <= 2 * hop_s


# ---------------------------------------------------------------------------
# detect / compare
# ---------------------------------------------------------------------------

def test_detect_pristine_white_noise_is_clean(params):
    rng = np.random.default_rng(42)
    buf = AudioBuffer(samples=rng.uniform(-0.5, 0.5, 16000 * 8), sample_rate_hz=16000)
    report = detect(buf, params)
    assert report.verdict is False
    assert report.diagnostics["peak_count"] > 0


def test_detect_silence_is_clean(params):
    buf = AudioBuffer(samples=np.zeros(16000 * 3), sample_rate_hz=16000)
    report = detect(buf, params)
    assert report.verdict is False
    assert report.diagnostics["peak_count"] == 0
    assert report.diagnostics["landmark_count"] == 0


def test_detect_one_second_copy(params):
    buf = synth_speech(12.0, seed=31)
    forged, truth = make_forgery(buf, ForgerySpec(src_start_s=1.5, duration_s=1.0,
                                                  dst_start_s=8.0))
    report = detect(forged, params)
    assert report.verdict is True
    assert len(report.segments) == 1
    true_offset = truth.offset_samples / 16000
    assert abs(report.segments[0].offset_s - true_offset) <= 128 / 16000


def test_detect_diagnostics_schema(params):
    buf = synth_speech(10.0, seed=32)
    report = detect(buf, params)
    assert set(report.diagnostics) == {
        "peak_count", "landmark_count", "tensor_count",
        "candidate_pairs", "confirmed_pairs", "undefined_correlations",
    }
    assert report.params["k"] == 3
    assert report.params["theta"] == 0.9


def test_compare_finds_cross_file_copy(params):
    base = synth_speech(8.0, seed=33)
    delay_s = 1.25
    pad = np.zeros(int(delay_s * 16000))
    delayed = AudioBuffer(samples=np.concatenate([pad, base.samples]),
                          sample_rate_hz=16000)
    report = compare(base, delayed, params)
    assert report.verdict is True
    seg = max(report.segments, key=lambda s: s.pair_count)
    assert abs(seg.offset_s - delay_s) <= 128 / 16000


def test_compare_unrelated_noise_is_clean(params):
    rng = np.random.default_rng(44)
    a = AudioBuffer(samples=rng.uniform(-0.5, 0.5, 16000 * 6), sample_rate_hz=16000)
    b = AudioBuffer(samples=rng.uniform(-0.5, 0.5, 16000 * 6), sample_rate_hz=16000)
    report = compare(a, b, params)
    assert report.verdict is False
    assert "identical_input" not in report.diagnostics


def test_compare_identical_input_guard(params):
    buf = synth_speech(6.0, seed=45)
    report = compare(buf, buf, params)
    assert report.verdict is False
    assert report.diagnostics["identical_input"] is True


def test_compare_reports_carry_file_labels(params):
    a = synth_speech(6.0, seed=46)
    b = synth_speech(6.0, seed=47)
    report = compare(a, b, params)
    assert report.params["file_a"] == a.source_path
    assert report.params["file_b"] == b.source_path
