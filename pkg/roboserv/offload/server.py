"""Local-cloud server hosting object and speech recognition"""

import logging
import socket
import socketserver
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple, Union

from ..speech.decoder import recognize
from ..speech.hmm import SpeechModel
from ..speech.model_io import load_speech_model
from ..speech.training import fixture_speech_model
from ..speech.vocabulary import SAMPLE_RATE
from ..utils.file_utils import find_models
from ..vision.fixture import fixture_network
from ..vision.network import Network, infer
from ..vision.network_io import load_network
from .endpoints import DEFAULT_PORT
from .protocol import (
    HEADER_SIZE,
    MAGIC,
    AsrRequest,
    AsrResponse,
    ErrorCode,
    ErrorMessage,
    FramingError,
    Message,
    ObjectRequest,
    ObjectResponse,
    ProtocolError,
    decode_header,
    decode_payload,
    encode_message,
    message_type,
)

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class ServiceModels:
    """Read-only models shared by every connection"""
    network: Network
    speech: SpeechModel


def fixture_models() -> ServiceModels:
    return ServiceModels(fixture_network(), fixture_speech_model())


def load_service_models(models_dir: Union[str, Path]) -> ServiceModels:
    """Load the network and speech model files from a models directory"""
    paths = find_models(models_dir)
    return ServiceModels(load_network(paths["vision"]), load_speech_model(paths["speech"]))


def handle_request(request: Message, models: ServiceModels) -> Message:
    """Answer one decoded request; the same code path serves simulated calls"""
    start = time.perf_counter_ns()
    if isinstance(request, ObjectRequest):
        image = request.image()
        if image.shape != models.network.input_dims:
            return ErrorMessage(ErrorCode.PROCESSING,
                                f"image {image.shape} does not match network input {models.network.input_dims}")
        labels = infer(models.network, image)
        return ObjectResponse([(label.name, label.score) for label in labels])
    if isinstance(request, AsrRequest):
        if request.sample_rate != SAMPLE_RATE:
            return ErrorMessage(ErrorCode.PROCESSING, f"sample rate must be {SAMPLE_RATE} Hz, got {request.sample_rate}")
        transcript = recognize(models.speech, request.samples)
        return AsrResponse(transcript.text, time.perf_counter_ns() - start)
    return ErrorMessage(ErrorCode.UNSUPPORTED, f"cannot serve message type {message_type(request).name}")


class _FrameStream:
    """Buffered reader over one connection that can skip to the next sync word"""

    def __init__(self, sock: socket.socket):
        self.sock = sock
        self.buffer = bytearray()

    def _fill(self) -> bool:
        chunk = self.sock.recv(65536)
        if not chunk:
            return False
        self.buffer += chunk
        return True

    def peek_header(self) -> Optional[bytes]:
        """Header bytes at the front; short once the sync word mismatches, None at end of stream"""
        while len(self.buffer) < HEADER_SIZE:
            lead = bytes(self.buffer[:len(MAGIC)])
            if lead != MAGIC[:len(lead)]:
                break
            if not self._fill():
                return None
        return bytes(self.buffer[:HEADER_SIZE])

    def take(self, n: int) -> bytes:
        """Up to n bytes; fewer only if the peer closed"""
        while len(self.buffer) < n and self._fill():
            pass
        chunk = bytes(self.buffer[:n])
        del self.buffer[:n]
        return chunk

    def resync(self) -> bool:
        """Drop the front byte and everything before the next sync word; False at end of stream"""
        del self.buffer[:1]
        while True:
            at = self.buffer.find(MAGIC)
            if at >= 0:
                del self.buffer[:at]
                return True
            # a sync word may straddle two reads
            del self.buffer[:max(0, len(self.buffer) - len(MAGIC) + 1)]
            if not self._fill():
                return False


class _Handler(socketserver.BaseRequestHandler):
    """Sequential request loop for one connection"""

    def handle(self):
        sock: socket.socket = self.request
        peer = "%s:%s" % self.client_address[:2]
        logger.debug("connection from %s", peer)
        stream = _FrameStream(sock)
        while True:
            header = stream.peek_header()
            if header is None:
                break
            try:
                kind, length = decode_header(header)
            except ProtocolError as exc:
                logger.warning("%s: bad frame header: %s", peer, exc)
                if not self._reply(sock, ErrorMessage(ErrorCode.BAD_FRAME, str(exc))):
                    break
                if not stream.resync():
                    break
                continue
            stream.take(HEADER_SIZE)
            payload = stream.take(length)
            if len(payload) < length:
                logger.warning("%s: %s", peer, FramingError(f"closed after {len(payload)} of {length} bytes"))
                break
            start = time.perf_counter_ns()
            try:
                response = handle_request(decode_payload(kind, payload), self.server.models)
            except ProtocolError as exc:
                response = ErrorMessage(ErrorCode.BAD_FRAME, str(exc))
            except Exception as exc:  # keep serving other requests
                logger.exception("%s: request failed", peer)
                response = ErrorMessage(ErrorCode.PROCESSING, str(exc))
            logger.info("type=%s bytes=%d processing_ns=%d", kind.name.lower(), HEADER_SIZE + length,
                        time.perf_counter_ns() - start)
            if not self._reply(sock, response):
                break
        logger.debug("connection from %s closed", peer)

    @staticmethod
    def _reply(sock: socket.socket, message: Message) -> bool:
        try:
            sock.sendall(encode_message(message))
            return True
        except OSError:
            return False


class OffloadServer(socketserver.ThreadingTCPServer):
    """Threaded TCP server; one handler thread per connection"""
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, address: Tuple[str, int], models: ServiceModels):
        super().__init__(address, _Handler)
        self.models = models
        self._thread: Optional[threading.Thread] = None

    @property
    def address(self) -> Tuple[str, int]:
        return self.server_address[:2]

    def start(self) -> "OffloadServer":
        """Serve from a background thread"""
        self._thread = threading.Thread(target=self.serve_forever, name="offload-server", daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self.shutdown()
        self.server_close()
        if self._thread is not None:
            self._thread.join(timeout=2.0)


def serve_offload(host: str = "0.0.0.0", port: int = DEFAULT_PORT, models: Optional[ServiceModels] = None) -> None:
    """Bind and serve until interrupted; bind failures raise OSError"""
    server = OffloadServer((host, port), models or fixture_models())
    logger.info("offload server listening on %s:%d", *server.address)
    try:
        server.serve_forever()
    finally:
        server.server_close()
