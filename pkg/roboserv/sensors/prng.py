"""Deterministic 64-bit shift-register PRNG used for every sensor stream

Algorithm (fixed, so streams reproduce across implementations):

    seeding:   state = splitmix64(seed); a zero state is replaced by 0x9E3779B97F4A7C15
    step:      x ^= x >> 12; x ^= (x << 25) mod 2^64; x ^= x >> 27
    output:    (x * 0x2545F4914F6CDD1D) mod 2^64            (xorshift64*)
    uniform:   (output >> 11) * 2^-53                        in [0, 1)
    normal:    u1 = 1 - uniform(), u2 = uniform()
               sqrt(-2 ln u1) * cos(2 pi u2)                 (cosine branch only)

splitmix64(z): z += 0x9E3779B97F4A7C15; z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9;
               z = (z ^ (z >> 27)) * 0x94D049BB133111EB; return z ^ (z >> 31)
(all arithmetic mod 2^64)
"""

import math
from typing import List

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
XORSHIFT_MULTIPLIER = 0x2545F4914F6CDD1D


def splitmix64(seed: int) -> int:
    """Scramble a seed into a well-mixed 64-bit state"""
    z = (seed + GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class Xorshift64Star:
    """xorshift64* generator with splitmix64 seeding"""

    def __init__(self, seed: int):
        if seed < 0 or seed > MASK64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.state = splitmix64(seed) or GOLDEN_GAMMA

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & MASK64
        x ^= x >> 27
        self.state = x
        return (x * XORSHIFT_MULTIPLIER) & MASK64

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)

    def uniform_range(self, low: float, high: float) -> float:
        return low + (high - low) * self.uniform()

    def normal(self, mean: float = 0.0, std: float = 1.0) -> float:
        u1 = 1.0 - self.uniform()
        u2 = self.uniform()
        return mean + std * math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def normals(self, n: int, std: float = 1.0) -> np.ndarray:
        """Draw n normals in stream order"""
        out: List[float] = [self.normal(0.0, std) for _ in range(n)]
        return np.array(out, dtype=np.float64)

    def numpy_generator(self) -> np.random.Generator:
        """PCG64 generator seeded from this stream, for bulk image noise"""
        return np.random.default_rng(self.next_u64())


def derive_seed(seed: int, *salts: int) -> int:
    """Derive an independent sub-stream seed from a base seed and salts"""
    z = seed & MASK64
    for salt in salts:
        z = splitmix64(z ^ (salt & MASK64))
    return z
