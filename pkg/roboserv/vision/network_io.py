"""Network file format (JSON document with base64 float64 arrays)

    {
      "format": "roboserv-cnn",
      "version": 1,
      "input_dims": [C, H, W],
      "labels": [...],
      "layers": [
        {"kind": "conv", "stride": s, "padding": p, "weights": ARRAY, "bias": ARRAY},
        {"kind": "activation", "function": "relu" | "sigmoid" | "tanh"},
        {"kind": "pool", "function": "max", "window": w, "stride": s},
        {"kind": "fc", "weights": ARRAY, "bias": ARRAY},
        {"kind": "softmax"}
      ]
    }

ARRAY = {"dims": [...], "dtype": "<f8", "data": base64 of little-endian float64, row-major}.
Documents are written with sorted keys, two-space indent and a trailing newline.
"""

import base64
import binascii
import json
from pathlib import Path
from typing import Union

import numpy as np

from .layers import Activation, Conv, FullyConnected, Pool, ShapeError, Softmax
from .network import Network

FORMAT_TAG = "roboserv-cnn"
FORMAT_VERSION = 1
ARRAY_DTYPE = "<f8"


class NetworkFormatError(ValueError):
    """Malformed network file; offset is the byte position when known"""

    def __init__(self, message: str, offset: int = None):
        if offset is not None:
            message = f"{message} (at byte {offset})"
        super().__init__(message)
        self.offset = offset


def encode_array(array: np.ndarray) -> dict:
    data = np.ascontiguousarray(array, dtype=ARRAY_DTYPE)
    return {"dims": list(data.shape), "dtype": ARRAY_DTYPE, "data": base64.b64encode(data.tobytes()).decode("ascii")}


def decode_array(doc: dict, where: str) -> np.ndarray:
    if not isinstance(doc, dict) or set(doc) != {"dims", "dtype", "data"}:
        raise NetworkFormatError(f"{where}: array must have exactly dims, dtype and data")
    if doc["dtype"] != ARRAY_DTYPE:
        raise NetworkFormatError(f"{where}: unsupported dtype {doc['dtype']!r}")
    try:
        raw = base64.b64decode(doc["data"], validate=True)
    except (binascii.Error, TypeError) as exc:
        raise NetworkFormatError(f"{where}: bad base64 data: {exc}") from None
    dims = [int(d) for d in doc["dims"]]
    expected = int(np.prod(dims)) if dims else 1
    if len(raw) != 8 * expected:
        raise ShapeError(f"{where}: {len(raw) // 8} values stored but dims {dims} need {expected}")
    return np.frombuffer(raw, dtype=ARRAY_DTYPE).reshape(dims).astype(np.float64)


def _layer_doc(layer) -> dict:
    if isinstance(layer, Conv):
        return {"kind": "conv", "stride": layer.stride, "padding": layer.padding,
                "weights": encode_array(layer.weights), "bias": encode_array(layer.bias)}
    if isinstance(layer, Activation):
        return {"kind": "activation", "function": layer.function}
    if isinstance(layer, Pool):
        return {"kind": "pool", "function": layer.function, "window": layer.window, "stride": layer.stride}
    if isinstance(layer, FullyConnected):
        return {"kind": "fc", "weights": encode_array(layer.weights), "bias": encode_array(layer.bias)}
    if isinstance(layer, Softmax):
        return {"kind": "softmax"}
    raise TypeError(f"unsupported layer {layer!r}")


def _layer_from_doc(doc: dict, index: int):
    where = f"layer {index}"
    if not isinstance(doc, dict) or "kind" not in doc:
        raise NetworkFormatError(f"{where}: layer entry needs a kind")
    kind = doc["kind"]
    try:
        if kind == "conv":
            return Conv(decode_array(doc["weights"], f"{where} (conv) weights"),
                        decode_array(doc["bias"], f"{where} (conv) bias"),
                        stride=int(doc["stride"]), padding=int(doc["padding"]))
        if kind == "activation":
            return Activation(doc["function"])
        if kind == "pool":
            return Pool(window=int(doc["window"]), stride=int(doc["stride"]), function=doc["function"])
        if kind == "fc":
            return FullyConnected(decode_array(doc["weights"], f"{where} (fc) weights"),
                                  decode_array(doc["bias"], f"{where} (fc) bias"))
        if kind == "softmax":
            return Softmax()
    except KeyError as exc:
        raise NetworkFormatError(f"{where} ({kind}): missing field {exc}") from None
    except ShapeError as exc:
        if str(exc).startswith(where):
            raise
        raise ShapeError(f"{where} ({kind}): {exc}") from None
    raise NetworkFormatError(f"{where}: unknown layer kind {kind!r}")


def dumps_network(net: Network) -> bytes:
    doc = {
        "format": FORMAT_TAG,
        "version": FORMAT_VERSION,
        "input_dims": list(net.input_dims),
        "labels": list(net.labels),
        "layers": [_layer_doc(layer) for layer in net.layers],
    }
    return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode("utf-8")


def loads_network(data: bytes) -> Network:
    """Parse a network document; structural problems raise NetworkFormatError, shape problems ShapeError"""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise NetworkFormatError("network file is not UTF-8", exc.start) from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[:exc.pos].encode("utf-8"))
        raise NetworkFormatError(f"network file is not valid JSON: {exc.msg}", offset) from None
    if not isinstance(doc, dict):
        raise NetworkFormatError("network document must be a JSON object", 0)
    if doc.get("format") != FORMAT_TAG:
        raise NetworkFormatError(f"unexpected format tag {doc.get('format')!r}")
    if doc.get("version") != FORMAT_VERSION:
        raise NetworkFormatError(f"unsupported version {doc.get('version')!r}")
    try:
        layers = [_layer_from_doc(layer, i) for i, layer in enumerate(doc["layers"])]
        return Network(layers, doc["labels"], doc["input_dims"])
    except KeyError as exc:
        raise NetworkFormatError(f"missing field {exc}") from None


def save_network(net: Network, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.write_bytes(dumps_network(net))
    return path


def load_network(path: Union[str, Path]) -> Network:
    return loads_network(Path(path).read_bytes())
