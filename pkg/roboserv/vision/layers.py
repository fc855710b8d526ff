"""CNN layer definitions and forward operations

Tensors are float64 numpy arrays shaped (channels, height, width) for
feature maps or (length,) for vectors. Convolution is cross-correlation.
"""

from dataclasses import dataclass, field
from typing import Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

ACTIVATIONS = ("relu", "sigmoid", "tanh")


class ShapeError(ValueError):
    """Tensor dimensions do not conform to a layer"""


def as_tensor(data) -> np.ndarray:
    tensor = np.asarray(data, dtype=np.float64)
    if not np.all(np.isfinite(tensor)):
        raise ValueError("tensor values must be finite")
    return tensor


def _spatial_output(size: int, kernel: int, stride: int, padding: int, what: str) -> int:
    span = size - kernel + 2 * padding
    if span < 0 or span % stride != 0:
        raise ShapeError(f"{what}: (in {size} - kernel {kernel} + 2*pad {padding}) is not a "
                         f"non-negative multiple of stride {stride}")
    return span // stride + 1


@dataclass(eq=False)
class Conv:
    weights: np.ndarray  # (filters, in_channels, kh, kw)
    bias: np.ndarray  # (filters,)
    stride: int = 1
    padding: int = 0
    kind: str = field(default="conv", init=False)

    def __post_init__(self):
        self.weights = as_tensor(self.weights)
        self.bias = as_tensor(self.bias)
        if self.weights.ndim != 4:
            raise ShapeError(f"conv weights must be 4D (filters, channels, kh, kw), got {self.weights.shape}")
        if self.bias.shape != (self.weights.shape[0],):
            raise ShapeError(f"conv bias must have {self.weights.shape[0]} values, got {self.bias.shape}")
        if self.stride < 1 or self.padding < 0:
            raise ValueError(f"invalid conv stride {self.stride} / padding {self.padding}")

    @property
    def num_filters(self) -> int:
        return self.weights.shape[0]

    @property
    def kernel(self) -> Tuple[int, int]:
        return self.weights.shape[2], self.weights.shape[3]

    def output_shape(self, shape: Tuple[int, ...]) -> Tuple[int, ...]:
        if len(shape) != 3 or shape[0] != self.weights.shape[1]:
            raise ShapeError(f"conv expects ({self.weights.shape[1]}, H, W) input, got {shape}")
        kh, kw = self.kernel
        return (self.num_filters,
                _spatial_output(shape[1], kh, self.stride, self.padding, "conv height"),
                _spatial_output(shape[2], kw, self.stride, self.padding, "conv width"))


@dataclass(eq=False)
class Activation:
    function: str = "relu"
    kind: str = field(default="activation", init=False)

    def __post_init__(self):
        if self.function not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}, got {self.function!r}")

    def output_shape(self, shape):
        return tuple(shape)


@dataclass(eq=False)
class Pool:
    window: int = 2
    stride: int = 2
    function: str = "max"
    kind: str = field(default="pool", init=False)

    def __post_init__(self):
        if self.function != "max":
            raise ValueError(f"only max pooling is supported, got {self.function!r}")
        if self.window < 1 or self.stride < 1:
            raise ValueError(f"invalid pool window {self.window} / stride {self.stride}")

    def output_shape(self, shape):
        if len(shape) != 3:
            raise ShapeError(f"pool expects (C, H, W) input, got {shape}")
        return (shape[0],
                _spatial_output(shape[1], self.window, self.stride, 0, "pool height"),
                _spatial_output(shape[2], self.window, self.stride, 0, "pool width"))


@dataclass(eq=False)
class FullyConnected:
    weights: np.ndarray  # (outputs, inputs)
    bias: np.ndarray  # (outputs,)
    kind: str = field(default="fc", init=False)

    def __post_init__(self):
        self.weights = as_tensor(self.weights)
        self.bias = as_tensor(self.bias)
        if self.weights.ndim != 2:
            raise ShapeError(f"fc weights must be 2D, got {self.weights.shape}")
        if self.bias.shape != (self.weights.shape[0],):
            raise ShapeError(f"fc bias must have {self.weights.shape[0]} values, got {self.bias.shape}")

    def output_shape(self, shape):
        size = int(np.prod(shape))
        if size != self.weights.shape[1]:
            raise ShapeError(f"fc expects {self.weights.shape[1]} inputs, got {size} from shape {tuple(shape)}")
        return (self.weights.shape[0],)


@dataclass(eq=False)
class Softmax:
    kind: str = field(default="softmax", init=False)

    def output_shape(self, shape):
        if len(shape) != 1:
            raise ShapeError(f"softmax expects a vector, got {shape}")
        return tuple(shape)


LayerSpec = Union[Conv, Activation, Pool, FullyConnected, Softmax]


def conv_forward(x: np.ndarray, layer: Conv) -> np.ndarray:
    """Cross-correlate every filter with the (zero-padded) input and add its bias"""
    layer.output_shape(x.shape)
    p, s = layer.padding, layer.stride
    padded = np.pad(x, ((0, 0), (p, p), (p, p))) if p else x
    windows = sliding_window_view(padded, layer.kernel, axis=(1, 2))[:, ::s, ::s]
    return np.einsum("chwij,fcij->fhw", windows, layer.weights) + layer.bias[:, None, None]


def apply_activation(x: np.ndarray, function: str) -> np.ndarray:
    if function == "relu":
        return np.maximum(x, 0.0)
    if function == "sigmoid":
        return 0.5 * (1.0 + np.tanh(0.5 * x))
    if function == "tanh":
        return np.tanh(x)
    raise ValueError(f"unknown activation {function!r}")


def pool_forward(x: np.ndarray, layer: Pool) -> np.ndarray:
    layer.output_shape(x.shape)
    windows = sliding_window_view(x, (layer.window, layer.window), axis=(1, 2))[:, ::layer.stride, ::layer.stride]
    return windows.max(axis=(3, 4))


def fc_forward(x: np.ndarray, layer: FullyConnected) -> np.ndarray:
    """y = W * flatten(x) + b"""
    layer.output_shape(x.shape)
    return layer.weights @ x.reshape(-1) + layer.bias


def softmax(x: np.ndarray) -> np.ndarray:
    shifted = np.exp(x - np.max(x))
    return shifted / shifted.sum()


def layer_forward(x: np.ndarray, layer: LayerSpec) -> np.ndarray:
    if isinstance(layer, Conv):
        return conv_forward(x, layer)
    if isinstance(layer, Activation):
        return apply_activation(x, layer.function)
    if isinstance(layer, Pool):
        return pool_forward(x, layer)
    if isinstance(layer, FullyConnected):
        return fc_forward(x, layer)
    if isinstance(layer, Softmax):
        layer.output_shape(x.shape)
        return softmax(x)
    raise TypeError(f"unsupported layer {layer!r}")
