"""Deterministic fixture classifier for the generated shape images

Two fixed convolution blocks (hand-designed edge filters, then per-channel
box filters) feed one fully connected layer whose weights are fitted by
ridge regression on a generated training set.
"""

import logging
from functools import lru_cache

import numpy as np
from tqdm import tqdm

from .layers import Activation, Conv, FullyConnected, Pool, Softmax, layer_forward
from .network import Network, infer
from .shapes import IMAGE_SIZE, SHAPE_LABELS, generate_shape_set

logger = logging.getLogger(__name__)

TRAIN_SEED = 7
TRAIN_PER_CLASS = 100
TEST_SEED = 11
TEST_PER_CLASS = 50
RIDGE = 1e-3  # relative to the mean feature energy
LOGIT_SCALE = 16.0


def edge_filters() -> np.ndarray:
    """Identity plus signed horizontal, vertical and diagonal gradients, (9, 1, 3, 3)"""
    identity = np.zeros((3, 3))
    identity[1, 1] = 1.0
    sobel_x = np.array([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])
    diagonal = np.array([[0.0, 1.0, 2.0], [-1.0, 0.0, 1.0], [-2.0, -1.0, 0.0]])
    anti_diagonal = np.fliplr(diagonal)
    kernels = [identity]
    for k in (sobel_x, sobel_x.T, diagonal, anti_diagonal):
        kernels.extend([k, -k])
    return np.array(kernels)[:, None, :, :]


def box_filters(channels: int = 9) -> np.ndarray:
    weights = np.zeros((channels, channels, 3, 3))
    for c in range(channels):
        weights[c, c] = 1.0 / 9.0
    return weights


def feature_layers():
    return [
        Conv(edge_filters(), np.zeros(9), stride=1, padding=1),
        Activation("relu"),
        Pool(2, 2),
        Conv(box_filters(), np.zeros(9), stride=1, padding=1),
        Activation("relu"),
        Pool(2, 2),
    ]


def extract_shape_features(layers, images: np.ndarray, progress: bool = False) -> np.ndarray:
    rows = []
    for image in tqdm(images, desc="Features", unit="img", disable=not progress):
        x = image[None, :, :]
        for layer in layers:
            x = layer_forward(x, layer)
        rows.append(x.reshape(-1))
    return np.array(rows)


def fit_classifier(features: np.ndarray, labels: np.ndarray, n_classes: int):
    """Ridge regression onto one-hot targets; returns (weights, bias)"""
    x = np.hstack([features, np.ones((len(features), 1))])
    targets = np.eye(n_classes)[labels]
    gram = x.T @ x
    penalty = RIDGE * float(np.mean(np.diag(gram))) * np.eye(gram.shape[0])
    penalty[-1, -1] = 0.0
    solution = np.linalg.solve(gram + penalty, x.T @ targets)
    return LOGIT_SCALE * solution[:-1].T, LOGIT_SCALE * solution[-1]


def build_fixture_network(progress: bool = False) -> Network:
    """Rebuild the fixture network from scratch (deterministic)"""
    layers = feature_layers()
    images, labels = generate_shape_set(TRAIN_PER_CLASS, TRAIN_SEED)
    features = extract_shape_features(layers, images, progress)
    weights, bias = fit_classifier(features, labels, len(SHAPE_LABELS))
    logger.info("fitted fixture classifier on %d images", len(images))
    layers += [FullyConnected(weights, bias), Softmax()]
    return Network(layers, SHAPE_LABELS, (1, IMAGE_SIZE, IMAGE_SIZE))


@lru_cache(maxsize=1)
def fixture_network() -> Network:
    """Shared read-only instance of the fixture network"""
    return build_fixture_network()


def evaluate_accuracy(net: Network, per_class: int = TEST_PER_CLASS, seed: int = TEST_SEED) -> float:
    images, labels = generate_shape_set(per_class, seed)
    hits = sum(infer(net, image)[0].name == SHAPE_LABELS[label] for image, label in zip(images, labels))
    return hits / len(images)
