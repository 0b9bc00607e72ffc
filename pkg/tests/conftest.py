"""Shared fixtures: deterministic speech-like corpora used across suites.

Fixture synthesis dominates test wall time, so forged/pristine corpora are
built once per session and reused by the matcher, CLI, and acceptance
tests. Every buffer is seeded; nothing here depends on test order.
"""

from __future__ import annotations

import numpy as np
import pytest

from audiocmf.forgery_lab import make_forgery, place_salient_forgery, synth_speech
from audiocmf.matcher import DetectorParams

FORGED_SEED_BASE = 100
PRISTINE_SEED_BASE = 500
COPY_DURATION_S = 0.5
N_FIXTURES = 20


@pytest.fixture(scope="session")
def params() -> DetectorParams:
    return DetectorParams()


@pytest.fixture(scope="session")
def forged_corpus(params):
    """20 speech-like fixtures (10-30 s) each carrying one 0.5 s copy-move
    at a salient source position; returns [(forged_buffer, truth)]."""
    corpus = []
    for seed in range(N_FIXTURES):
        rng = np.random.default_rng(seed + FORGED_SEED_BASE)
        duration = rng.uniform(10.0, 30.0)
        buf = synth_speech(duration, seed=seed + FORGED_SEED_BASE)
        spec = place_salient_forgery(buf, COPY_DURATION_S, rng, params)
        corpus.append(make_forgery(buf, spec))
    return corpus


@pytest.fixture(scope="session")
def pristine_corpus():
    """20 untouched speech-like fixtures (10-30 s)."""
    corpus = []
    for seed in range(N_FIXTURES):
        rng = np.random.default_rng(seed + PRISTINE_SEED_BASE)
        corpus.append(synth_speech(rng.uniform(10.0, 30.0), seed=seed + PRISTINE_SEED_BASE))
    return corpus


def segment_offset_error_s(report, truth) -> float | None:
    """Smallest |reported - true| copy offset over the report's segments."""
    if not report.segments:
        return None
    true_offset = truth.offset_samples / truth.sample_rate_hz
    return min(abs(seg.offset_s - true_offset) for seg in report.segments)
