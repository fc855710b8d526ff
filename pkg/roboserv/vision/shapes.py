"""Generated 32x32 shape images for the fixture classifier"""

from typing import List, Tuple

import numpy as np

SHAPE_LABELS = ("square", "cross", "disk", "triangle")
IMAGE_SIZE = 32
SUPERSAMPLE = 4
HALF_SIZE_RANGE = (8.0, 12.0)
CENTER_JITTER = 2.0
NOISE_STD = 0.05


def _inside(kind: str, dx: np.ndarray, dy: np.ndarray, r: float) -> np.ndarray:
    if kind == "square":
        return (np.abs(dx) <= r) & (np.abs(dy) <= r)
    if kind == "cross":
        arm = r / 3.0
        return ((np.abs(dx) <= arm) & (np.abs(dy) <= r)) | ((np.abs(dy) <= arm) & (np.abs(dx) <= r))
    if kind == "disk":
        return dx * dx + dy * dy <= r * r
    if kind == "triangle":
        # apex at (0, -r), base along dy = +r
        return (dy >= -r) & (dy <= r) & (np.abs(dx) <= (dy + r) / 2.0)
    raise ValueError(f"unknown shape {kind!r}; expected one of {SHAPE_LABELS}")


def draw_shape(kind: str, cx: float, cy: float, r: float, size: int = IMAGE_SIZE) -> np.ndarray:
    """Anti-aliased filled shape (1.0) on a 0.0 background"""
    offsets = (np.arange(SUPERSAMPLE) + 0.5) / SUPERSAMPLE - 0.5
    grid = (np.arange(size)[:, None] + offsets[None, :]).ravel()
    ys, xs = np.meshgrid(grid, grid, indexing="ij")
    mask = _inside(kind, xs - cx, ys - cy, r).astype(np.float64)
    return mask.reshape(size, SUPERSAMPLE, size, SUPERSAMPLE).mean(axis=(1, 3))


def fixture_image(kind: str) -> np.ndarray:
    """Centred, noise-free shape used as the reference input for each label"""
    centre = (IMAGE_SIZE - 1) / 2.0
    return draw_shape(kind, centre, centre, 10.0)


def random_shape(kind: str, rng: np.random.Generator, noise_std: float = NOISE_STD) -> np.ndarray:
    centre = (IMAGE_SIZE - 1) / 2.0
    cx = centre + rng.uniform(-CENTER_JITTER, CENTER_JITTER)
    cy = centre + rng.uniform(-CENTER_JITTER, CENTER_JITTER)
    r = rng.uniform(*HALF_SIZE_RANGE)
    image = draw_shape(kind, cx, cy, r)
    if noise_std > 0:
        image = image + rng.normal(0.0, noise_std, image.shape)
    return image


def generate_shape_set(per_class: int, seed: int,
                       noise_std: float = NOISE_STD) -> Tuple[np.ndarray, np.ndarray]:
    """
    Balanced labelled image set

    Returns:
        (images (N, 32, 32), label indices (N,)), classes interleaved
    """
    rng = np.random.default_rng(seed)
    images: List[np.ndarray] = []
    labels: List[int] = []
    for _ in range(per_class):
        for index, kind in enumerate(SHAPE_LABELS):
            images.append(random_shape(kind, rng, noise_std))
            labels.append(index)
    return np.array(images), np.array(labels, dtype=np.int64)
