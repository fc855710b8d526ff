"""Harris corner features with normalized patch descriptors"""

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy import ndimage

DESCRIPTOR_SIZE = 8
DESCRIPTOR_OFFSETS = np.arange(DESCRIPTOR_SIZE, dtype=np.float64) - (DESCRIPTOR_SIZE - 1) / 2.0
REFINE_HALF_WINDOW = 2  # 5x5
MAX_REFINE_SHIFT = 1.5  # px
BORDER_MARGIN = 6  # px
RELATIVE_THRESHOLD = 0.01
MIN_RESPONSE = 1e-6


@dataclass(frozen=True, eq=False)
class FeaturePoint:
    u: float
    v: float
    score: float
    descriptor: np.ndarray  # unit norm, DESCRIPTOR_SIZE**2

    @property
    def pixel(self) -> Tuple[float, float]:
        return self.u, self.v


def image_gradients(image: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    img = np.asarray(image, dtype=np.float64)
    return ndimage.sobel(img, axis=1, mode="nearest"), ndimage.sobel(img, axis=0, mode="nearest")


def harris_response(image: np.ndarray, k: float = 0.04, sigma: float = 1.0) -> np.ndarray:
    """Harris corner response det(M) - k*trace(M)^2 of the Gaussian-weighted structure tensor"""
    ix, iy = image_gradients(image)
    sxx = ndimage.gaussian_filter(ix * ix, sigma, mode="nearest")
    syy = ndimage.gaussian_filter(iy * iy, sigma, mode="nearest")
    sxy = ndimage.gaussian_filter(ix * iy, sigma, mode="nearest")
    return sxx * syy - sxy * sxy - k * (sxx + syy) ** 2


def _non_max_suppression(response: np.ndarray, radius: int, threshold: float, margin: int) -> List[Tuple[int, int]]:
    size = 2 * radius + 1
    local_max = response == ndimage.maximum_filter(response, size=size, mode="nearest")
    mask = local_max & (response > threshold)
    mask[:margin, :] = False
    mask[-margin:, :] = False
    mask[:, :margin] = False
    mask[:, -margin:] = False
    vs, us = np.nonzero(mask)
    order = np.lexsort((us, vs, -response[vs, us]))  # score desc, then v, then u
    suppressed = np.zeros(response.shape, dtype=bool)
    keep = []
    for i in order:
        v, u = int(vs[i]), int(us[i])
        if suppressed[v, u]:
            continue
        keep.append((v, u))
        suppressed[max(0, v - radius):v + radius + 1, max(0, u - radius):u + radius + 1] = True
    return keep


def refine_corner(ix: np.ndarray, iy: np.ndarray, v: int, u: int) -> Optional[Tuple[float, float]]:
    """
    Sub-pixel corner position from gradient orthogonality

    Every gradient in the window is orthogonal to the vector from the corner
    to its pixel, so the corner q solves (sum g g^T) q = sum g g^T p.
    """
    h = REFINE_HALF_WINDOW
    gx = ix[v - h:v + h + 1, u - h:u + h + 1]
    gy = iy[v - h:v + h + 1, u - h:u + h + 1]
    pv, pu = np.mgrid[v - h:v + h + 1, u - h:u + h + 1].astype(np.float64)
    a = np.array([[np.sum(gx * gx), np.sum(gx * gy)], [np.sum(gx * gy), np.sum(gy * gy)]])
    b = np.array([np.sum(gx * gx * pu + gx * gy * pv), np.sum(gx * gy * pu + gy * gy * pv)])
    det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    if det <= 1e-12 * max(1.0, np.trace(a)) ** 2:
        return float(u), float(v)
    qu, qv = np.linalg.solve(a, b)
    if max(abs(qu - u), abs(qv - v)) > MAX_REFINE_SHIFT:
        return None
    return float(qu), float(qv)


def patch_descriptor(image: np.ndarray, u: float, v: float) -> Optional[np.ndarray]:
    """Zero-mean, unit-norm bilinear resample of the 8x8 patch centred at (u, v)"""
    rows = v + DESCRIPTOR_OFFSETS[:, None] + np.zeros(DESCRIPTOR_SIZE)[None, :]
    cols = u + DESCRIPTOR_OFFSETS[None, :] + np.zeros(DESCRIPTOR_SIZE)[:, None]
    patch = ndimage.map_coordinates(np.asarray(image, dtype=np.float64), [rows.ravel(), cols.ravel()],
                                    order=1, mode="nearest")
    patch = patch - patch.mean()
    norm = np.linalg.norm(patch)
    if norm < 1e-9:
        return None
    return patch / norm


def extract_features(image: np.ndarray, k: float = 0.04, nms_radius: int = 5) -> List[FeaturePoint]:
    """
    Detect Harris corners and describe each with a normalized patch

    Args:
        image: 2D grayscale array
        k: Harris sensitivity
        nms_radius: square non-maximum suppression radius in pixels

    Returns:
        Features ordered by descending score (ties by row, then column)
    """
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2 or min(img.shape) < DESCRIPTOR_SIZE:
        raise ValueError(f"image must be 2D and at least {DESCRIPTOR_SIZE}x{DESCRIPTOR_SIZE}, got {img.shape}")
    margin = max(BORDER_MARGIN, nms_radius)
    if min(img.shape) <= 2 * margin:
        return []
    response = harris_response(img, k)
    threshold = max(RELATIVE_THRESHOLD * float(response.max()), MIN_RESPONSE)
    ix, iy = image_gradients(img)
    features = []
    for v, u in _non_max_suppression(response, nms_radius, threshold, margin):
        refined = refine_corner(ix, iy, v, u)
        if refined is None:
            continue
        descriptor = patch_descriptor(img, *refined)
        if descriptor is None:
            continue
        features.append(FeaturePoint(refined[0], refined[1], float(response[v, u]), descriptor))
    return features


def descriptor_distance(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b))
