"""Command vocabulary: every word is a fixed sequence of pure tones"""

from typing import Dict, Tuple

import numpy as np

SAMPLE_RATE = 8000
CHUNK_SAMPLES = 800  # 100 ms
TONE_AMPLITUDE = 8000.0
SEGMENT_MS = 120
FADE_MS = 5
SILENCE_MS = 200

SEGMENT_SAMPLES = SAMPLE_RATE * SEGMENT_MS // 1000
FADE_SAMPLES = SAMPLE_RATE * FADE_MS // 1000
SILENCE_SAMPLES = SAMPLE_RATE * SILENCE_MS // 1000

# word -> tone frequencies (Hz), one per segment
VOCABULARY: Dict[str, Tuple[float, ...]] = {
    "stop": (750.0, 2750.0),
    "go": (1250.0, 3250.0),
    "left": (1750.0, 750.0),
    "right": (2250.0, 3750.0),
}

SILENCE = "<sil>"


def check_word(word: str) -> None:
    if word not in VOCABULARY:
        raise ValueError(f"unknown word {word!r}; vocabulary is {sorted(VOCABULARY)}")


def tone_segment(frequency_hz: float) -> np.ndarray:
    """One faded tone segment as float samples"""
    n = np.arange(SEGMENT_SAMPLES, dtype=np.float64)
    tone = TONE_AMPLITUDE * np.sin(2.0 * np.pi * frequency_hz * n / SAMPLE_RATE)
    envelope = np.ones(SEGMENT_SAMPLES)
    ramp = np.arange(FADE_SAMPLES, dtype=np.float64) / FADE_SAMPLES
    envelope[:FADE_SAMPLES] = ramp
    envelope[-FADE_SAMPLES:] = ramp[::-1]
    return tone * envelope


def render_word(word: str) -> np.ndarray:
    """Noise-free float waveform of a vocabulary word"""
    check_word(word)
    return np.concatenate([tone_segment(f) for f in VOCABULARY[word]])


def word_duration_samples(word: str) -> int:
    check_word(word)
    return SEGMENT_SAMPLES * len(VOCABULARY[word])
