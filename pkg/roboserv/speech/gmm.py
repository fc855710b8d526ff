"""Diagonal-covariance Gaussian mixtures"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

LOG_2PI = math.log(2.0 * math.pi)


@dataclass(eq=False)
class GmmModel:
    weights: np.ndarray  # (C,)
    means: np.ndarray  # (C, M)
    variances: np.ndarray  # (C, M)

    def __post_init__(self):
        """Validate mixture parameters"""
        self.weights = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        self.means = np.atleast_2d(np.asarray(self.means, dtype=np.float64))
        self.variances = np.atleast_2d(np.asarray(self.variances, dtype=np.float64))
        c = len(self.weights)
        if c == 0 or self.means.shape[0] != c or self.variances.shape != self.means.shape:
            raise ValueError(f"inconsistent GMM shapes: weights {self.weights.shape}, "
                             f"means {self.means.shape}, variances {self.variances.shape}")
        if np.any(self.weights <= 0) or abs(self.weights.sum() - 1.0) > 1e-9:
            raise ValueError(f"GMM weights must be positive and sum to 1, got {self.weights}")
        if np.any(self.variances <= 0):
            raise ValueError("GMM variances must be positive")

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def component_log_densities(self, x: np.ndarray) -> np.ndarray:
        """log w_c + log N(x; mu_c, diag var_c) for every row of x, shape (T, C)"""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.dim:
            raise ValueError(f"feature dimension {x.shape[1]} does not match GMM dimension {self.dim}")
        diff = x[:, None, :] - self.means[None, :, :]
        quad = np.sum(diff * diff / self.variances[None, :, :], axis=2)
        log_norm = -0.5 * (self.dim * LOG_2PI + np.sum(np.log(self.variances), axis=1))
        return np.log(self.weights)[None, :] + log_norm[None, :] - 0.5 * quad


def gmm_log_likelihood(gmm: GmmModel, x: np.ndarray) -> float:
    """log sum_c w_c N(x; mu_c, diag var_c) of one feature vector"""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"expected a single feature vector, got shape {x.shape}")
    return float(logsumexp(gmm.component_log_densities(x)[0]))


def gmm_log_likelihoods(gmm: GmmModel, frames: np.ndarray) -> np.ndarray:
    """Per-frame log-likelihoods, shape (T,)"""
    return logsumexp(gmm.component_log_densities(frames), axis=1)
