"""Deterministic fixture training for the command-word models

Every word is rendered once clean and several times with white noise at
the fixture level. Frames that lie entirely inside a known tone segment
train that segment's GMM; frames inside the surrounding silence train the
silence GMM. Each GMM starts with one component per condition (clean /
noisy) and is refined by a few EM iterations.
"""

import logging
from functools import lru_cache
from typing import Dict, List, Tuple

import numpy as np
from scipy.special import logsumexp
from tqdm import tqdm

from .features import FRAME_SAMPLES, HOP_SAMPLES, extract_speech_features
from .gmm import GmmModel
from .hmm import SpeechModel
from .vocabulary import SEGMENT_SAMPLES, SILENCE_SAMPLES, VOCABULARY, render_word

logger = logging.getLogger(__name__)

FIXTURE_NOISE_STD = 300.0
NOISY_RENDERS = 4
EM_ITERATIONS = 5
VARIANCE_FLOOR = 1.0
MIN_WEIGHT = 1e-6
TRAIN_SEED = 5


def frames_inside(start: int, end: int) -> np.ndarray:
    """Indices of feature frames whose samples all lie in [start, end)"""
    first = -(-start // HOP_SAMPLES)
    last = (end - FRAME_SAMPLES) // HOP_SAMPLES
    return np.arange(first, last + 1) if last >= first else np.zeros(0, dtype=int)


def _render(word: str, noise_std: float, rng: np.random.Generator) -> np.ndarray:
    signal = np.concatenate([np.zeros(SILENCE_SAMPLES), render_word(word), np.zeros(SILENCE_SAMPLES)])
    if noise_std > 0:
        signal = signal + rng.normal(0.0, noise_std, len(signal))
    return np.clip(np.rint(signal), -32768, 32767).astype(np.int16)


def aligned_frames(word: str, samples: np.ndarray) -> Tuple[List[np.ndarray], np.ndarray]:
    """Split a rendered word into (per-segment frames, silence frames)"""
    features = extract_speech_features(samples)
    segments = []
    for j in range(len(VOCABULARY[word])):
        start = SILENCE_SAMPLES + j * SEGMENT_SAMPLES
        segments.append(features[frames_inside(start, start + SEGMENT_SAMPLES)])
    word_end = SILENCE_SAMPLES + len(VOCABULARY[word]) * SEGMENT_SAMPLES
    silence_idx = np.concatenate([frames_inside(0, SILENCE_SAMPLES),
                                  frames_inside(word_end, word_end + SILENCE_SAMPLES)])
    return segments, features[silence_idx]


def _moments(frames: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    return frames.mean(axis=0), np.maximum(frames.var(axis=0), VARIANCE_FLOOR)


def fit_gmm(conditions: List[np.ndarray], iterations: int = EM_ITERATIONS) -> GmmModel:
    """
    EM-refined diagonal GMM with one initial component per condition

    Args:
        conditions: frame arrays, one per recording condition
        iterations: EM iterations after the per-condition initialization

    Returns:
        GmmModel with len(conditions) components
    """
    data = np.vstack(conditions)
    stats = [_moments(frames) for frames in conditions]
    gmm = GmmModel(np.full(len(conditions), 1.0 / len(conditions)),
                   np.array([m for m, _ in stats]), np.array([v for _, v in stats]))
    for _ in range(iterations):
        log_joint = gmm.component_log_densities(data)
        resp = np.exp(log_joint - logsumexp(log_joint, axis=1, keepdims=True))
        mass = resp.sum(axis=0)
        means, variances = gmm.means.copy(), gmm.variances.copy()
        for c in np.flatnonzero(mass > 1e-9):
            means[c] = resp[:, c] @ data / mass[c]
            variances[c] = np.maximum(resp[:, c] @ (data - means[c]) ** 2 / mass[c], VARIANCE_FLOOR)
        weights = np.maximum(mass / mass.sum(), MIN_WEIGHT)
        gmm = GmmModel(weights / weights.sum(), means, variances)
    return gmm


def train_speech_model(noise_std: float = FIXTURE_NOISE_STD, noisy_renders: int = NOISY_RENDERS,
                       seed: int = TRAIN_SEED, progress: bool = False) -> SpeechModel:
    """Fit silence and per-segment GMMs on rendered vocabulary words"""
    if noisy_renders < 1 or noise_std <= 0:
        raise ValueError(f"need at least one noisy render with noise_std > 0, "
                         f"got {noisy_renders} renders at {noise_std}")
    rng = np.random.default_rng(seed)
    silence: Dict[str, List[np.ndarray]] = {"clean": [], "noisy": []}
    segments: Dict[str, List[Dict[str, List[np.ndarray]]]] = {}
    for word in tqdm(sorted(VOCABULARY), desc="Training", unit="word", disable=not progress):
        per_segment = [{"clean": [], "noisy": []} for _ in VOCABULARY[word]]
        renders = [("clean", 0.0)] + [("noisy", noise_std)] * noisy_renders
        for condition, std in renders:
            seg_frames, sil_frames = aligned_frames(word, _render(word, std, rng))
            for j, frames in enumerate(seg_frames):
                per_segment[j][condition].append(frames)
            silence[condition].append(sil_frames)
        segments[word] = per_segment

    def fit(pools: Dict[str, List[np.ndarray]]) -> GmmModel:
        return fit_gmm([np.vstack(pools["clean"]), np.vstack(pools["noisy"])])

    segment_gmms = {word: [fit(pools) for pools in per_segment] for word, per_segment in segments.items()}
    logger.info("trained speech model: %d words, noise std %.0f", len(segment_gmms), noise_std)
    return SpeechModel(dict(VOCABULARY), fit(silence), segment_gmms)


@lru_cache(maxsize=1)
def fixture_speech_model() -> SpeechModel:
    """Shared read-only instance of the fixture speech model"""
    return train_speech_model()

