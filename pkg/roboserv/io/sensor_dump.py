"""CSV and WAV dumps of the synthetic sensor streams"""

from pathlib import Path
from typing import Sequence, Union

import numpy as np
from scipy.io import wavfile

from ..sensors.audio import AudioChunk, concatenate_chunks
from ..sensors.imu import ImuSample, imu_arrays
from ..sensors.trajectory import GroundTruth
from ..speech.vocabulary import SAMPLE_RATE

IMU_COLUMNS = ("t_ns", "ax", "ay", "gyro_z")
GROUND_TRUTH_COLUMNS = ("t_ns", "x", "y", "heading", "vx", "vy")


def dump_imu_csv(samples: Sequence[ImuSample], path: Union[str, Path]) -> Path:
    path = Path(path)
    data = imu_arrays(samples)
    with open(path, "w", encoding="utf-8") as f:
        f.write(",".join(IMU_COLUMNS) + "\n")
        for row in data:
            f.write(f"{int(row[0])},{row[1]:.9g},{row[2]:.9g},{row[3]:.9g}\n")
    return path


def dump_ground_truth_csv(gt: GroundTruth, path: Union[str, Path], stride: int = 1) -> Path:
    """Dense ground truth; stride thins the 1 kHz rows"""
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    path = Path(path)
    columns = np.stack([gt.t_ns, gt.x, gt.y, gt.heading, gt.vx, gt.vy], axis=1)[::stride]
    with open(path, "w", encoding="utf-8") as f:
        f.write(",".join(GROUND_TRUTH_COLUMNS) + "\n")
        for row in columns:
            f.write(f"{int(row[0])}," + ",".join(f"{v:.9g}" for v in row[1:]) + "\n")
    return path


def dump_audio_wav(chunks: Sequence[AudioChunk], path: Union[str, Path]) -> Path:
    """16-bit mono WAV at the microphone rate"""
    path = Path(path)
    wavfile.write(path, SAMPLE_RATE, concatenate_chunks(chunks).astype(np.int16))
    return path
