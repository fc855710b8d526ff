"""Layer graph and inference"""

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .layers import LayerSpec, ShapeError, Softmax, as_tensor, layer_forward, softmax


@dataclass(frozen=True)
class Label:
    name: str
    score: float


class Network:
    """Ordered layers over a fixed input shape, ending in one output per label"""

    def __init__(self, layers: Sequence[LayerSpec], labels: Sequence[str], input_dims: Tuple[int, int, int]):
        self.layers: Tuple[LayerSpec, ...] = tuple(layers)
        self.labels: Tuple[str, ...] = tuple(labels)
        self.input_dims = tuple(int(d) for d in input_dims)
        self.shapes = self._check_shapes()

    def _check_shapes(self) -> List[Tuple[int, ...]]:
        shapes = [self.input_dims]
        for index, layer in enumerate(self.layers):
            try:
                shapes.append(tuple(layer.output_shape(shapes[-1])))
            except ShapeError as exc:
                raise ShapeError(f"layer {index} ({layer.kind}): {exc}") from None
        if shapes[-1] != (len(self.labels),):
            raise ShapeError(f"network output {shapes[-1]} does not match {len(self.labels)} labels")
        return shapes

    @property
    def ends_with_softmax(self) -> bool:
        return bool(self.layers) and isinstance(self.layers[-1], Softmax)

    def forward(self, image) -> np.ndarray:
        """Run every layer in order and return the final output vector"""
        x = as_tensor(image)
        if x.ndim == 2:
            x = x[None, :, :]
        if x.shape != self.input_dims:
            raise ShapeError(f"input {x.shape} does not match network input {self.input_dims}")
        for index, layer in enumerate(self.layers):
            try:
                x = layer_forward(x, layer)
            except ShapeError as exc:
                raise ShapeError(f"layer {index} ({layer.kind}): {exc}") from None
        return x


def infer(net: Network, image) -> List[Label]:
    """
    Classify an image

    Returns:
        One Label per network label, highest score first (ties by label order);
        scores sum to 1
    """
    scores = net.forward(image)
    if not net.ends_with_softmax:
        scores = softmax(scores)
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    return [Label(net.labels[i], float(scores[i])) for i in order]
