"""Offload wire protocol

Frame: magic "ROBO" | version u8 (1) | msg_type u8 | payload_len u32 | payload,
all big-endian. Payloads:

    1 obj-request   width u16, height u16, channels u8, pixels u8[w*h*c]
    2 obj-response  count u8, then per label: name_len u8, name UTF-8, score f32
    3 asr-request   sample_rate u32, sample_count u32, samples i16[n]
    4 asr-response  text_len u16, text UTF-8, server_processing_ns u64
  255 error         code u16, message UTF-8 (rest of payload)
"""

import struct
from dataclasses import dataclass, field
from enum import IntEnum
from typing import List, Tuple, Union

import numpy as np

MAGIC = b"ROBO"
VERSION = 1
MAX_PAYLOAD = 16 * 1024 * 1024
HEADER = struct.Struct(">4sBBI")
HEADER_SIZE = HEADER.size


class MsgType(IntEnum):
    OBJ_REQUEST = 1
    OBJ_RESPONSE = 2
    ASR_REQUEST = 3
    ASR_RESPONSE = 4
    ERROR = 255


class ErrorCode(IntEnum):
    BAD_FRAME = 1
    UNSUPPORTED = 2
    PROCESSING = 3


class ProtocolError(ValueError):
    """Bad magic, version, type, size or payload layout"""


class FramingError(ProtocolError):
    """Frame shorter (or longer) than its header announces"""


@dataclass(eq=False)
class ObjectRequest:
    width: int
    height: int
    channels: int
    pixels: bytes

    def __post_init__(self):
        if not (0 < self.width < 65536 and 0 < self.height < 65536 and 0 < self.channels < 256):
            raise ProtocolError(f"bad image dimensions {self.width}x{self.height}x{self.channels}")
        if len(self.pixels) != self.width * self.height * self.channels:
            raise ProtocolError(f"{len(self.pixels)} pixel bytes for a "
                                f"{self.width}x{self.height}x{self.channels} image")

    @classmethod
    def from_image(cls, image: np.ndarray) -> "ObjectRequest":
        """Quantize a [0, 1] grayscale (H, W) or (H, W, C) image to u8"""
        data = np.clip(np.rint(np.asarray(image, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)
        if data.ndim == 2:
            data = data[:, :, None]
        return cls(data.shape[1], data.shape[0], data.shape[2], data.tobytes())

    def image(self) -> np.ndarray:
        """(channels, height, width) float image in [0, 1]"""
        data = np.frombuffer(self.pixels, dtype=np.uint8).reshape(self.height, self.width, self.channels)
        return np.transpose(data, (2, 0, 1)).astype(np.float64) / 255.0

    def __eq__(self, other):
        return isinstance(other, ObjectRequest) and (self.width, self.height, self.channels, self.pixels) == (
            other.width, other.height, other.channels, other.pixels)


@dataclass
class ObjectResponse:
    labels: List[Tuple[str, float]] = field(default_factory=list)

    def __post_init__(self):
        if len(self.labels) > 255:
            raise ProtocolError(f"at most 255 labels per response, got {len(self.labels)}")
        self.labels = [(str(name), float(score)) for name, score in self.labels]


@dataclass(eq=False)
class AsrRequest:
    sample_rate: int
    samples: np.ndarray  # int16

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.int16)
        if not 0 < self.sample_rate < 2 ** 32:
            raise ProtocolError(f"bad sample rate {self.sample_rate}")

    def __eq__(self, other):
        return (isinstance(other, AsrRequest) and self.sample_rate == other.sample_rate
                and np.array_equal(self.samples, other.samples))


@dataclass
class AsrResponse:
    text: str
    server_processing_ns: int = 0


@dataclass
class ErrorMessage:
    code: int
    message: str = ""


Message = Union[ObjectRequest, ObjectResponse, AsrRequest, AsrResponse, ErrorMessage]


def message_type(msg: Message) -> MsgType:
    for cls, kind in _TYPES:
        if isinstance(msg, cls):
            return kind
    raise TypeError(f"not a protocol message: {msg!r}")


def _encode_payload(msg: Message) -> bytes:
    if isinstance(msg, ObjectRequest):
        return struct.pack(">HHB", msg.width, msg.height, msg.channels) + bytes(msg.pixels)
    if isinstance(msg, ObjectResponse):
        parts = [struct.pack(">B", len(msg.labels))]
        for name, score in msg.labels:
            raw = name.encode("utf-8")
            if len(raw) > 255:
                raise ProtocolError(f"label name longer than 255 bytes: {name[:20]!r}...")
            parts.append(struct.pack(">B", len(raw)) + raw + struct.pack(">f", score))
        return b"".join(parts)
    if isinstance(msg, AsrRequest):
        return struct.pack(">II", msg.sample_rate, len(msg.samples)) + msg.samples.astype(">i2").tobytes()
    if isinstance(msg, AsrResponse):
        raw = msg.text.encode("utf-8")
        if len(raw) > 65535:
            raise ProtocolError("transcript text longer than 65535 bytes")
        return struct.pack(">H", len(raw)) + raw + struct.pack(">Q", msg.server_processing_ns)
    if isinstance(msg, ErrorMessage):
        return struct.pack(">H", msg.code) + msg.message.encode("utf-8")
    raise TypeError(f"not a protocol message: {msg!r}")


def encode_message(msg: Message) -> bytes:
    payload = _encode_payload(msg)
    if len(payload) > MAX_PAYLOAD:
        raise ProtocolError(f"payload of {len(payload)} bytes exceeds {MAX_PAYLOAD}")
    return HEADER.pack(MAGIC, VERSION, message_type(msg), len(payload)) + payload


def decode_header(header: bytes) -> Tuple[MsgType, int]:
    """Validate a 10-byte header; returns (type, payload_len)"""
    lead = bytes(header[:len(MAGIC)])
    if lead != MAGIC[:len(lead)]:
        raise ProtocolError(f"bad magic {lead!r}")
    if len(header) < HEADER_SIZE:
        raise FramingError(f"truncated header: {len(header)} of {HEADER_SIZE} bytes")
    magic, version, kind, length = HEADER.unpack(header[:HEADER_SIZE])
    if magic != MAGIC:
        raise ProtocolError(f"bad magic {magic!r}")
    if version != VERSION:
        raise ProtocolError(f"unsupported protocol version {version}")
    if length > MAX_PAYLOAD:
        raise ProtocolError(f"payload of {length} bytes exceeds {MAX_PAYLOAD}")
    try:
        return MsgType(kind), length
    except ValueError:
        raise ProtocolError(f"unknown message type {kind}") from None


class _Reader:
    def __init__(self, payload: bytes):
        self.data = payload
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise ProtocolError(f"payload too short: need {n} bytes at offset {self.pos} of {len(self.data)}")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        size = struct.calcsize(fmt)
        return struct.unpack(fmt, self.take(size))

    def done(self) -> None:
        if self.pos != len(self.data):
            raise ProtocolError(f"{len(self.data) - self.pos} trailing payload bytes")


def _utf8(raw: bytes) -> str:
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ProtocolError(f"invalid UTF-8 text: {exc}") from None


def decode_payload(kind: MsgType, payload: bytes) -> Message:
    reader = _Reader(payload)
    if kind is MsgType.OBJ_REQUEST:
        width, height, channels = reader.unpack(">HHB")
        msg = ObjectRequest(width, height, channels, reader.take(width * height * channels))
    elif kind is MsgType.OBJ_RESPONSE:
        (count,) = reader.unpack(">B")
        labels = []
        for _ in range(count):
            (size,) = reader.unpack(">B")
            name = _utf8(reader.take(size))
            (score,) = reader.unpack(">f")
            labels.append((name, score))
        msg = ObjectResponse(labels)
    elif kind is MsgType.ASR_REQUEST:
        rate, count = reader.unpack(">II")
        samples = np.frombuffer(reader.take(2 * count), dtype=">i2").astype(np.int16)
        msg = AsrRequest(rate, samples)
    elif kind is MsgType.ASR_RESPONSE:
        (size,) = reader.unpack(">H")
        text = _utf8(reader.take(size))
        (processing,) = reader.unpack(">Q")
        msg = AsrResponse(text, processing)
    else:
        (code,) = reader.unpack(">H")
        return ErrorMessage(code, _utf8(reader.take(len(payload) - 2)))
    reader.done()
    return msg


def decode_message(data: bytes) -> Message:
    """Decode exactly one complete frame"""
    kind, length = decode_header(data)
    if len(data) < HEADER_SIZE + length:
        raise FramingError(f"truncated frame: payload has {len(data) - HEADER_SIZE} of {length} bytes")
    if len(data) > HEADER_SIZE + length:
        raise FramingError(f"{len(data) - HEADER_SIZE - length} bytes after the frame")
    return decode_payload(kind, data[HEADER_SIZE:HEADER_SIZE + length])


def recv_exact(sock, n: int) -> bytes:
    """Read exactly n bytes; fewer only if the peer closed"""
    parts = []
    remaining = n
    while remaining > 0:
        chunk = sock.recv(min(remaining, 65536))
        if not chunk:
            break
        parts.append(chunk)
        remaining -= len(chunk)
    return b"".join(parts)


def read_message(sock) -> Message:
    """Read one frame from a stream socket"""
    header = recv_exact(sock, HEADER_SIZE)
    if not header:
        raise EOFError("connection closed")
    kind, length = decode_header(header)
    payload = recv_exact(sock, length)
    if len(payload) < length:
        raise FramingError(f"connection closed after {len(payload)} of {length} payload bytes")
    return decode_payload(kind, payload)


_TYPES = (
    (ObjectRequest, MsgType.OBJ_REQUEST),
    (ObjectResponse, MsgType.OBJ_RESPONSE),
    (AsrRequest, MsgType.ASR_REQUEST),
    (AsrResponse, MsgType.ASR_RESPONSE),
    (ErrorMessage, MsgType.ERROR),
)
