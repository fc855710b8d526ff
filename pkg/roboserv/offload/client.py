"""Offload client: simulated or real round trips to a cloud endpoint"""

import logging
import socket
import time
from dataclasses import dataclass
from typing import Optional

from ..runtime.records import ServiceId
from .endpoints import Endpoint, parse_address
from .protocol import AsrRequest, ErrorMessage, Message, ObjectRequest, ProtocolError, decode_message, encode_message, \
    read_message
from .server import ServiceModels, fixture_models, handle_request

logger = logging.getLogger(__name__)

SIM = "sim"
SOCKET = "socket"


class OffloadTransportError(ConnectionError):
    """The endpoint could not be reached or answered with a broken frame"""


@dataclass
class OffloadResult:
    response: Message
    latency_ms: float
    mode: str

    @property
    def ok(self) -> bool:
        return not isinstance(self.response, ErrorMessage)


def service_of(request: Message) -> ServiceId:
    if isinstance(request, ObjectRequest):
        return ServiceId.VISION
    if isinstance(request, AsrRequest):
        return ServiceId.SPEECH
    raise TypeError(f"not a request message: {request!r}")


def offload_call(endpoint: Endpoint, request: Message, mode: str = SIM, index: int = 0,
                 models: Optional[ServiceModels] = None, timeout_s: float = 10.0) -> OffloadResult:
    """
    Send one request to an endpoint

    Args:
        endpoint: cloud endpoint hosting the request's service
        request: ObjectRequest or AsrRequest
        mode: "sim" answers locally with the endpoint's modeled latency for
            call number `index`; "socket" performs a real TCP round trip
        models: models for sim mode (fixture models by default)
        timeout_s: socket connect/read timeout

    Returns:
        OffloadResult with the decoded response and the latency in ms
    """
    service = service_of(request)
    if not endpoint.hosts(service):
        raise ValueError(f"endpoint {endpoint.name!r} does not host {service.value}")
    if mode == SIM:
        # through the codec so scores carry wire precision
        response = decode_message(encode_message(handle_request(request, models or fixture_models())))
        latency = 0.0 if endpoint.is_local else endpoint.services[service].sample_ms(service, index)
        return OffloadResult(response, latency, SIM)
    if mode != SOCKET:
        raise ValueError(f"mode must be {SIM!r} or {SOCKET!r}, got {mode!r}")
    host, port = parse_address(endpoint.address)
    start = time.perf_counter()
    try:
        with socket.create_connection((host, port), timeout=timeout_s) as sock:
            sock.sendall(encode_message(request))
            response = read_message(sock)
    except (OSError, EOFError, ProtocolError) as exc:
        raise OffloadTransportError(f"{endpoint.name} ({endpoint.address}): {exc}") from exc
    latency = (time.perf_counter() - start) * 1e3
    logger.debug("%s call to %s took %.1f ms", service.value, endpoint.name, latency)
    return OffloadResult(response, latency, SOCKET)
