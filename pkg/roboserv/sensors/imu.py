"""Planar IMU model: body-frame acceleration and yaw rate at 200 Hz"""

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .prng import Xorshift64Star, derive_seed
from .trajectory import GroundTruth

IMU_RATE_HZ = 200
IMU_PERIOD_NS = 1_000_000_000 // IMU_RATE_HZ


@dataclass
class ImuErrorModel:
    """Constant bias plus white noise on each planar IMU channel"""
    accel_bias: Tuple[float, float] = (0.0, 0.0)  # m/s^2, body x / y
    gyro_bias: float = 0.0  # rad/s
    accel_noise_std: float = 0.0  # m/s^2
    gyro_noise_std: float = 0.0  # rad/s

    def __post_init__(self):
        """Validate error magnitudes"""
        self.accel_bias = (float(self.accel_bias[0]), float(self.accel_bias[1]))
        if self.accel_noise_std < 0:
            raise ValueError(f"accel_noise_std must be >= 0, got {self.accel_noise_std}")
        if self.gyro_noise_std < 0:
            raise ValueError(f"gyro_noise_std must be >= 0, got {self.gyro_noise_std}")
        values = (*self.accel_bias, self.gyro_bias, self.accel_noise_std, self.gyro_noise_std)
        if not all(math.isfinite(v) for v in values):
            raise ValueError("IMU error model values must be finite")


@dataclass(frozen=True)
class ImuSample:
    t_ns: int
    ax: float  # m/s^2, body frame (x forward, y left)
    ay: float
    gyro_z: float  # rad/s

    @property
    def accel_body(self) -> np.ndarray:
        return np.array([self.ax, self.ay])


def imu_sample_count(duration_ns: int) -> int:
    return duration_ns * IMU_RATE_HZ // 1_000_000_000


def sample_imu(gt: GroundTruth, err: ImuErrorModel, seed: int) -> List[ImuSample]:
    """
    Sample the IMU along a ground-truth trajectory

    Sample k is taken at t_k = k * 5 ms and holds for [t_k, t_k+1).
    With a zero error model the output is the analytic body-frame
    acceleration and yaw rate of the trajectory.

    Args:
        gt: ground truth to sample
        err: bias and noise model
        seed: noise stream seed

    Returns:
        List of ImuSample in time order
    """
    if len(gt.t_ns) == 0:
        raise ValueError("ground truth is empty")
    n = imu_sample_count(gt.duration_ns)
    t_ns = np.arange(n, dtype=np.int64) * IMU_PERIOD_NS
    k = gt.kinematics_at(t_ns)
    c, s = np.cos(k["heading"]), np.sin(k["heading"])
    # world -> body: rotate by -heading
    ax = c * k["ax"] + s * k["ay"] + err.accel_bias[0]
    ay = -s * k["ax"] + c * k["ay"] + err.accel_bias[1]
    gz = k["omega"] + err.gyro_bias

    rng = Xorshift64Star(derive_seed(seed, 0x494D55))
    noise = rng.normals(3 * n).reshape(n, 3)
    ax = ax + err.accel_noise_std * noise[:, 0]
    ay = ay + err.accel_noise_std * noise[:, 1]
    gz = gz + err.gyro_noise_std * noise[:, 2]

    return [ImuSample(int(t), float(a), float(b), float(g)) for t, a, b, g in zip(t_ns, ax, ay, gz)]


def imu_arrays(samples: Sequence[ImuSample]) -> np.ndarray:
    """(N, 4) array of t_ns, ax, ay, gyro_z"""
    return np.array([(s.t_ns, s.ax, s.ay, s.gyro_z) for s in samples], dtype=np.float64).reshape(-1, 4)
