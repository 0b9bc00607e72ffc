"""Landmark pairing, integer packing, duplicate elimination, grouping."""

from collections import Counter

import numpy as np
import pytest

from audiocmf.constellation import PeakMap
from audiocmf.tensors import (
    EncodedLandmark,
    LandmarkVector,
    TargetZoneConfig,
    decode,
    encode,
    encode_all,
    eliminate_singletons,
    group_tensors,
    pair_landmarks,
    write_csv,
)


def peak_map(cells, source_frames=4000, source_bins=257, levels=None):
    cells = sorted(cells)
    frames = np.array([c[0] for c in cells], dtype=np.int64)
    bins = np.array([c[1] for c in cells], dtype=np.int64)
    if levels is None:
        lv = np.zeros(len(cells))
    else:
        lv = np.array([levels[c] for c in cells], dtype=float)
    return PeakMap(frames=frames, bins=bins, levels_db=lv,
                   source_frames=source_frames, source_bins=source_bins)


def brute_force_landmarks(cells, levels, zone):
    """Independent restatement: all in-zone pairs, loudest fan_out kept."""
    cells = sorted(cells)
    out = []
    for (ta, fa) in cells:
        if fa > 255:
            continue
        cand = [
            (tb, fb) for (tb, fb) in cells
            if fb <= 255 and 1 <= tb - ta <= zone.zone_frames and abs(fb - fa) <= zone.zone_bins
        ]
        cand.sort(key=lambda c: (-levels[c], c[0] - ta, abs(c[1] - fa), c[1]))
        kept = sorted((tb - ta, fb) for (tb, fb) in cand[: zone.fan_out])
        out.extend(LandmarkVector(fa, fb, dt, ta) for dt, fb in kept)
    return out


def test_single_peak_yields_nothing():
    pm = peak_map([(10, 40)])
    assert pair_landmarks(pm, TargetZoneConfig()) == []


def test_two_peak_vector():
    pm = peak_map([(10, 40), (14, 55)])
    assert pair_landmarks(pm, TargetZoneConfig()) == [LandmarkVector(40, 55, 4, 10)]


def test_zone_limits_respected():
    zone = TargetZoneConfig(zone_frames=8, zone_bins=10, fan_out=20)
    pm = peak_map([(0, 100), (9, 100), (4, 120), (4, 105)])
    got = pair_landmarks(pm, zone)
    # from (0,100): (9,100) out of time range, (4,120) out of bin range;
    # the (4,105) anchor still reaches (9,100)
    assert got == [LandmarkVector(100, 105, 4, 0), LandmarkVector(105, 100, 5, 4)]


@pytest.mark.parametrize("seed", range(10))
def test_matches_brute_force_oracle(seed):
    rng = np.random.default_rng(seed)
    n = 20
    cells = set()
    while len(cells) < n:
        cells.add((int(rng.integers(0, 120)), int(rng.integers(0, 257))))
    levels = {c: float(rng.uniform(-80.0, 0.0)) for c in cells}
    zone = TargetZoneConfig(zone_frames=64, zone_bins=64, fan_out=5)
    pm = peak_map(cells, source_frames=130, levels=levels)
    assert pair_landmarks(pm, zone) == brute_force_landmarks(cells, levels, zone)


def test_fan_out_bound():
    rng = np.random.default_rng(77)
    cells = {(int(rng.integers(0, 300)), int(rng.integers(0, 256))) for _ in range(200)}
    zone = TargetZoneConfig(fan_out=7)
    pm = peak_map(cells, source_frames=310)
    got = pair_landmarks(pm, zone)
    per_anchor = Counter((v.t_anchor, v.f_anchor) for v in got)
    assert max(per_anchor.values()) <= 7
    assert len(got) <= 7 * len(cells)


def test_translation_invariance():
    rng = np.random.default_rng(11)
    cells = sorted({(int(rng.integers(0, 100)), int(rng.integers(0, 256))) for _ in range(40)})
    levels = {c: float(rng.uniform(-60, 0)) for c in cells}
    zone = TargetZoneConfig()
    base = pair_landmarks(peak_map(cells, source_frames=200, levels=levels), zone)
    shift = 37
    moved = [(t + shift, f) for t, f in cells]
    levels_moved = {(t + shift, f): levels[(t, f)] for t, f in cells}
    out = pair_landmarks(peak_map(moved, source_frames=250, levels=levels_moved), zone)
    assert [(v.f_anchor, v.f_sat, v.dt) for v in base] == [(v.f_anchor, v.f_sat, v.dt) for v in out]
    assert [v.t_anchor + shift for v in base] == [v.t_anchor for v in out]


def test_encode_spot_value():
    enc = encode(LandmarkVector(100, 50, 10, 0), fft_size=512, zone_frames=64)
    assert enc.z == 100 * 2**14 + 50 * 2**6 + 10 == 1_641_610


def test_encode_zero_fields():
    assert encode(LandmarkVector(0, 0, 1, 0), 512, 64).z == 1


def test_encode_rejects_out_of_range():
    with pytest.raises(ValueError):
        encode(LandmarkVector(256, 0, 1, 0), 512, 64)
    with pytest.raises(ValueError):
        encode(LandmarkVector(0, 0, 0, 0), 512, 64)
    with pytest.raises(ValueError):
        encode(LandmarkVector(0, 0, 65, 0), 512, 64)


def test_roundtrip_random_vectors():
    rng = np.random.default_rng(13)
    for _ in range(20_000):
        v = LandmarkVector(int(rng.integers(0, 256)), int(rng.integers(0, 256)),
                           int(rng.integers(1, 65)), int(rng.integers(0, 10_000)))
        enc = encode(v, 512, 64)
        assert decode(enc.z, 512, 64, t_anchor=v.t_anchor) == v


def test_roundtrip_at_dt_equal_zone_frames():
    # dt == zone_frames is the aliasing-prone corner of the packed layout
    for f_a, f_s in [(0, 0), (3, 255), (255, 0)]:
        v = LandmarkVector(f_a, f_s, 64, 5)
        enc = encode(v, 512, 64)
        assert decode(enc.z, 512, 64, t_anchor=5) == v


def test_eliminate_singletons_examples():
    def lm(z):
        return EncodedLandmark(z=z, vec=LandmarkVector(0, 0, 1, z))

    assert eliminate_singletons([lm(1), lm(2), lm(3)]) == []
    got = eliminate_singletons([lm(5), lm(5), lm(7)])
    assert [e.z for e in got] == [5, 5]


@pytest.mark.parametrize("seed", range(6))
def test_eliminate_singletons_quadratic_oracle(seed):
    rng = np.random.default_rng(seed)
    entries = [EncodedLandmark(z=int(rng.integers(0, 30)),
                               vec=LandmarkVector(0, 0, 1, i)) for i in range(60)]
    got = eliminate_singletons(entries)
    expected = [e for e in entries
                if sum(1 for other in entries if other.z == e.z) >= 2]
    assert got == expected
    assert all(c >= 2 for c in Counter(e.z for e in got).values())


def test_group_tensors_examples():
    assert group_tensors([]) == []
    mk = lambda t, f, fs, dt: EncodedLandmark(z=encode(LandmarkVector(f, fs, dt, t), 512, 64).z,
                                              vec=LandmarkVector(f, fs, dt, t))
    u = [mk(5, 10, 20, 1), mk(5, 10, 30, 2), mk(5, 10, 40, 3),
         mk(9, 50, 60, 1), mk(9, 50, 70, 2)]
    tensors = group_tensors(u)
    assert [t.anchor_id for t in tensors] == [0, 1]
    assert [(t.t_anchor, t.f_anchor) for t in tensors] == [(5, 10), (9, 50)]
    assert [len(t.members) for t in tensors] == [3, 2]


def test_csv_dump(tmp_path):
    landmarks = encode_all([LandmarkVector(100, 50, 10, 7)], 512, 64)
    path = tmp_path / "landmarks.csv"
    write_csv(landmarks, path)
    lines = path.read_text().splitlines()
    assert lines == ["t_anchor,f_anchor,f_sat,dt,z", "7,100,50,10,1641610"]


def test_copy_region_produces_twin_tensors():
    """An exact repetition of a peak pattern at a frame offset yields, for
    each tensor in the copy whose zone stays inside it, a twin tensor with
    equal bin and members at the shifted time."""
    rng = np.random.default_rng(21)
    pattern = sorted({(int(rng.integers(0, 50)), int(rng.integers(0, 200))) for _ in range(25)})
    offset = 400
    cells = pattern + [(t + offset, f) for t, f in pattern]
    levels = {}
    for t, f in pattern:
        levels[(t, f)] = float(rng.uniform(-40, 0))
        levels[(t + offset, f)] = levels[(t, f)]
    zone = TargetZoneConfig(zone_frames=30, zone_bins=64, fan_out=10)
    pm = peak_map(cells, source_frames=500, levels=levels)
    encoded = encode_all(pair_landmarks(pm, zone), 512, 30)
    tensors = group_tensors(eliminate_singletons(encoded))
    early = {(t.t_anchor, t.f_anchor): t.members for t in tensors if t.t_anchor < 100}
    late = {(t.t_anchor, t.f_anchor): t.members for t in tensors if t.t_anchor >= 100}
    # anchors whose whole zone fits inside the repeated block must have twins
    for (t_a, f_a), members in early.items():
        if t_a + zone.zone_frames <= 50:
            assert late.get((t_a + offset, f_a)) == members
