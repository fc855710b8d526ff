"""Microphone stream: vocabulary words rendered at 8 kHz in 100 ms chunks"""

from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from ..speech.vocabulary import (
    CHUNK_SAMPLES,
    SAMPLE_RATE,
    SILENCE_SAMPLES,
    check_word,
    render_word,
)
from .prng import Xorshift64Star, derive_seed

CHUNK_NS = 1_000_000_000 * CHUNK_SAMPLES // SAMPLE_RATE


@dataclass(frozen=True, eq=False)
class AudioChunk:
    t_ns: int
    samples: np.ndarray  # int16
    sample_rate: int = SAMPLE_RATE

    @property
    def duration_ns(self) -> int:
        return 1_000_000_000 * len(self.samples) // self.sample_rate


def render_utterance(words: Sequence[str]) -> np.ndarray:
    """Float waveform: leading silence, then each word followed by a gap"""
    for word in words:
        check_word(word)
    parts = [np.zeros(SILENCE_SAMPLES)]
    for word in words:
        parts.append(render_word(word))
        parts.append(np.zeros(SILENCE_SAMPLES))
    return np.concatenate(parts)


def _noise(n: int, std: float, seed: int, salt: int) -> np.ndarray:
    if std == 0:
        return np.zeros(n)
    rng = Xorshift64Star(derive_seed(seed, 0x415544, salt)).numpy_generator()
    return rng.normal(0.0, std, n)


def _quantize(signal: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(signal), -32768, 32767).astype(np.int16)


def chunk_signal(samples: np.ndarray, start_ns: int = 0) -> List[AudioChunk]:
    """Split int16 samples (length a multiple of the chunk size) into contiguous chunks"""
    n = len(samples) // CHUNK_SAMPLES
    return [
        AudioChunk(start_ns + i * CHUNK_NS, samples[i * CHUNK_SAMPLES:(i + 1) * CHUNK_SAMPLES].copy())
        for i in range(n)
    ]


def synthesize_audio(word_sequence: Iterable[str], seed: int, noise_std: float = 0.0) -> List[AudioChunk]:
    """
    Render a word sequence as 100 ms audio chunks

    Args:
        word_sequence: vocabulary words
        seed: noise stream seed
        noise_std: additive white noise in LSB

    Returns:
        Contiguous chunks starting at t = 0, padded with silence to a whole chunk
    """
    if noise_std < 0:
        raise ValueError(f"noise_std must be >= 0, got {noise_std}")
    signal = render_utterance(list(word_sequence))
    padded = -(-len(signal) // CHUNK_SAMPLES) * CHUNK_SAMPLES
    signal = np.concatenate([signal, np.zeros(padded - len(signal))])
    signal = signal + _noise(len(signal), noise_std, seed, 0)
    return chunk_signal(_quantize(signal))


def compose_audio_track(utterances: Sequence[Tuple[float, Sequence[str]]], duration_s: float,
                        noise_std: float, seed: int) -> List[AudioChunk]:
    """
    Continuous microphone track for a run with utterances at scripted times

    Args:
        utterances: (start time s, words) pairs; each is rendered like synthesize_audio
        duration_s: track length, truncated to whole chunks
        noise_std: additive white noise in LSB over the whole track
        seed: noise stream seed

    Returns:
        Contiguous chunks covering [0, duration)
    """
    n_chunks = int(round(duration_s * 1e9)) // CHUNK_NS
    track = np.zeros(n_chunks * CHUNK_SAMPLES)
    for start_s, words in utterances:
        wave = render_utterance(list(words))
        first = int(round(start_s * SAMPLE_RATE))
        if first >= len(track):
            continue
        last = min(len(track), first + len(wave))
        track[first:last] += wave[:last - first]
    track = track + _noise(len(track), noise_std, seed, 1)
    return chunk_signal(_quantize(track))


def concatenate_chunks(chunks: Sequence[AudioChunk]) -> np.ndarray:
    if not chunks:
        return np.zeros(0, dtype=np.int16)
    return np.concatenate([c.samples for c in chunks])
