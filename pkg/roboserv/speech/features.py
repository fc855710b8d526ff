"""Log band-energy features over 25 ms frames"""

from typing import Iterable, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .vocabulary import SAMPLE_RATE

FRAME_SAMPLES = 200  # 25 ms
HOP_SAMPLES = 80  # 10 ms
NUM_BANDS = 8
BAND_WIDTH_HZ = 500.0
LOG_FLOOR = 1e-10

_WINDOW = np.hanning(FRAME_SAMPLES)
_BIN_HZ = np.fft.rfftfreq(FRAME_SAMPLES, d=1.0 / SAMPLE_RATE)
# bin -> band; the Nyquist bin (4000 Hz) joins the top band
_BAND_OF_BIN = np.minimum((_BIN_HZ // BAND_WIDTH_HZ).astype(int), NUM_BANDS - 1)
_BAND_MATRIX = np.eye(NUM_BANDS)[_BAND_OF_BIN]  # (bins, bands)


def frame_count(num_samples: int) -> int:
    if num_samples < FRAME_SAMPLES:
        return 0
    return (num_samples - FRAME_SAMPLES) // HOP_SAMPLES + 1


def _collect(audio) -> np.ndarray:
    if isinstance(audio, np.ndarray):
        return audio.astype(np.float64)
    chunks = list(audio)
    for chunk in chunks:
        if chunk.sample_rate != SAMPLE_RATE:
            raise ValueError(f"sample rate must be {SAMPLE_RATE} Hz, got {chunk.sample_rate}")
    if not chunks:
        return np.zeros(0)
    return np.concatenate([np.asarray(c.samples, dtype=np.float64) for c in chunks])


def extract_speech_features(audio: Union[np.ndarray, Iterable], sample_rate: int = SAMPLE_RATE) -> np.ndarray:
    """
    Log band energies of Hann-windowed frames

    Args:
        audio: AudioChunk stream (checked for 8 kHz) or a raw sample array
        sample_rate: rate of a raw sample array

    Returns:
        (frames, 8) array; row t covers samples [80t, 80t + 200)
    """
    if sample_rate != SAMPLE_RATE:
        raise ValueError(f"sample rate must be {SAMPLE_RATE} Hz, got {sample_rate}")
    signal = _collect(audio)
    n = frame_count(len(signal))
    if n == 0:
        return np.zeros((0, NUM_BANDS))
    frames = sliding_window_view(signal, FRAME_SAMPLES)[::HOP_SAMPLES][:n] * _WINDOW
    power = np.abs(np.fft.rfft(frames, axis=1)) ** 2
    return np.log(np.maximum(power @ _BAND_MATRIX, LOG_FLOOR))
