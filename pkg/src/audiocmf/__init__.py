"""Blind audio copy-move forgery detection and localization.

Pipeline: pre-emphasized log spectrogram -> constellation of local-maximum
peaks -> translation-invariant landmark tensors per anchor -> bin-wise
duplicate search -> spectrogram-slice correlation confirmation -> offset
clustering into tampered segments. A companion probability model predicts
detection robustness as peaks are erased by noise or post-processing.
"""

from .audio_io import AudioBuffer, load_wav, pre_emphasize, save_wav
from .config import Config
from .constellation import NeighborhoodConfig, PeakMap, find_peaks, peak_density
from .forgery_lab import (
    AttackSpec,
    ForgerySpec,
    ForgeryTruth,
    apply_attack,
    make_forgery,
    measure_survival,
    place_salient_forgery,
    run_benchmark,
    synth_speech,
)
from .matcher import (
    DetectorParams,
    ForgeryReport,
    MatchConfig,
    MatchPair,
    Segment,
    binwise_match,
    compare,
    confirm,
    correlate,
    detect,
    localize,
    report_to_json,
)
from .probability import (
    SurvivalModel,
    exist_prob,
    monte_carlo_pair_match,
    pair_match_prob_both_attacked,
    pair_match_prob_one_attacked,
    pair_state_probs,
)
from .spectrogram import Spectrogram, StftConfig, stft
from .tensors import (
    EncodedLandmark,
    FeatureTensor,
    LandmarkVector,
    TargetZoneConfig,
    decode,
    encode,
    eliminate_singletons,
    group_tensors,
    pair_landmarks,
)

__version__ = "0.1.0"
