import logging
import socket
import struct

import numpy as np
import pytest

from roboserv.offload.client import OffloadTransportError, offload_call
from roboserv.offload.endpoints import Endpoint, EndpointKind, LatencyModel, ToleranceTable, lan_fixture, \
    parse_address, wan_fixture
from roboserv.offload.placement import decide_placement
from roboserv.offload.policy import all_local_estimate, estimate_policy
from roboserv.offload.protocol import (
    HEADER_SIZE,
    AsrRequest,
    AsrResponse,
    ErrorCode,
    ErrorMessage,
    FramingError,
    ObjectRequest,
    ObjectResponse,
    ProtocolError,
    decode_message,
    encode_message,
    read_message,
)
from roboserv.offload.server import OffloadServer, handle_request
from roboserv.runtime.records import ServiceId
from roboserv.runtime.resources import ProfileTable
from roboserv.sensors.audio import concatenate_chunks, synthesize_audio
from roboserv.vision.shapes import fixture_image


def _random_text(rng, max_len):
    alphabet = "abcdefghijklmnopqrstuvwxyz éü→"
    return "".join(rng.choice(list(alphabet), size=int(rng.integers(0, max_len))))


def _random_message(rng):
    kind = int(rng.integers(0, 5))
    if kind == 0:
        w, h, c = (int(v) for v in rng.integers(1, 9, 3))
        return ObjectRequest(w, h, c, rng.integers(0, 256, w * h * c, dtype=np.uint8).tobytes())
    if kind == 1:
        count = int(rng.integers(0, 6))
        return ObjectResponse([(_random_text(rng, 12), float(np.float32(rng.uniform())))
                               for _ in range(count)])
    if kind == 2:
        return AsrRequest(int(rng.integers(1, 48001)), rng.integers(-32768, 32768, int(rng.integers(0, 500))))
    if kind == 3:
        return AsrResponse(_random_text(rng, 40), int(rng.integers(0, 2 ** 62)))
    return ErrorMessage(int(rng.integers(0, 65536)), _random_text(rng, 30))


def test_decode_inverts_encode_for_random_messages():
    rng = np.random.default_rng(40)
    for _ in range(10_000):
        msg = _random_message(rng)
        assert decode_message(encode_message(msg)) == msg


def test_frame_header_layout():
    frame = encode_message(AsrResponse("go", 7))
    assert frame[:4] == b"ROBO"
    assert frame[4] == 1 and frame[5] == 4
    assert struct.unpack(">I", frame[6:10])[0] == len(frame) - HEADER_SIZE


def test_decode_rejects_bad_frames():
    frame = encode_message(AsrResponse("left", 10))
    with pytest.raises(FramingError):
        decode_message(frame[:6])
    with pytest.raises(FramingError):
        decode_message(frame[:-1])
    with pytest.raises(FramingError):
        decode_message(frame + b"\x00")
    with pytest.raises(ProtocolError):
        decode_message(b"BOBO" + frame[4:])
    with pytest.raises(ProtocolError):
        decode_message(frame[:4] + b"\x02" + frame[5:])
    with pytest.raises(ProtocolError):
        decode_message(frame[:5] + b"\x07" + frame[6:])
    # payload says 4 pixels, carries 3
    short = struct.pack(">4sBBI", b"ROBO", 1, 1, 8) + struct.pack(">HHB", 2, 2, 1) + b"\x00\x00\x00"
    with pytest.raises(ProtocolError):
        decode_message(short)
    bad_text = struct.pack(">H", 2) + b"\xff\xfe" + struct.pack(">Q", 0)
    with pytest.raises(ProtocolError):
        decode_message(struct.pack(">4sBBI", b"ROBO", 1, 4, len(bad_text)) + bad_text)


def test_message_validation():
    with pytest.raises(ProtocolError):
        ObjectRequest(2, 2, 1, b"\x00")
    with pytest.raises(ProtocolError):
        ObjectRequest(0, 2, 1, b"")
    with pytest.raises(ProtocolError):
        ObjectResponse([("x", 0.5)] * 256)


def test_handle_request_answers_both_services(models):
    response = handle_request(ObjectRequest.from_image(fixture_image("cross")), models)
    assert isinstance(response, ObjectResponse)
    assert response.labels[0][0] == "cross"
    audio = concatenate_chunks(synthesize_audio(["right"], seed=4))
    response = handle_request(AsrRequest(8000, audio), models)
    assert isinstance(response, AsrResponse)
    assert response.text == "right"
    assert response.server_processing_ns > 0
    error = handle_request(AsrRequest(16000, audio), models)
    assert isinstance(error, ErrorMessage) and error.code == ErrorCode.PROCESSING
    error = handle_request(ObjectRequest(4, 4, 1, bytes(16)), models)
    assert isinstance(error, ErrorMessage)
    error = handle_request(AsrResponse("go"), models)
    assert error.code == ErrorCode.UNSUPPORTED


@pytest.fixture
def server(models):
    srv = OffloadServer(("127.0.0.1", 0), models).start()
    yield srv
    srv.stop()


def _assert_error_then_disk(sock):
    reply = read_message(sock)
    assert isinstance(reply, ErrorMessage)
    assert reply.code == ErrorCode.BAD_FRAME
    reply = read_message(sock)
    assert isinstance(reply, ObjectResponse)
    assert reply.labels[0][0] == "disk"


def test_server_recovers_from_garbage(server):
    with socket.create_connection(server.address, timeout=10.0) as sock:
        sock.sendall(b"GARBAGE-BYTES-NOT-A-FRAME")
        sock.sendall(encode_message(ObjectRequest.from_image(fixture_image("disk"))))
        _assert_error_then_disk(sock)


def test_server_recovers_from_garbage_in_the_same_write(server):
    frame = encode_message(ObjectRequest.from_image(fixture_image("disk")))
    with socket.create_connection(server.address, timeout=10.0) as sock:
        sock.sendall(b"GARBAGE-BYTES-NOT-A-FRAME" + frame)
        _assert_error_then_disk(sock)


def test_server_recovers_from_garbage_shorter_than_a_header(server):
    frame = encode_message(ObjectRequest.from_image(fixture_image("disk")))
    with socket.create_connection(server.address, timeout=10.0) as sock:
        sock.sendall(b"XXXX")
        sock.sendall(frame)
        _assert_error_then_disk(sock)


def test_server_skips_a_header_with_a_bad_version(server):
    frame = encode_message(ObjectRequest.from_image(fixture_image("disk")))
    with socket.create_connection(server.address, timeout=10.0) as sock:
        sock.sendall(frame[:4] + b"\x09" + frame[5:HEADER_SIZE] + b"RO" + frame)
        _assert_error_then_disk(sock)


def test_server_answers_sequential_requests_on_one_connection(server):
    audio = concatenate_chunks(synthesize_audio(["stop", "go"], seed=5))
    with socket.create_connection(server.address, timeout=10.0) as sock:
        for _ in range(3):
            sock.sendall(encode_message(AsrRequest(8000, audio)))
            reply = read_message(sock)
            assert isinstance(reply, AsrResponse)
            assert reply.text == "stop go"


def test_socket_offload_call(server):
    host, port = server.address
    endpoint = lan_fixture(f"{host}:{port}")
    result = offload_call(endpoint, ObjectRequest.from_image(fixture_image("triangle")), mode="socket")
    assert result.ok
    assert result.mode == "socket"
    assert result.latency_ms > 0
    assert result.response.labels[0][0] == "triangle"


def test_sim_and_socket_responses_match(server, models):
    host, port = server.address
    endpoint = lan_fixture(f"{host}:{port}")
    for shape in ("triangle", "disk", "cross"):
        request = ObjectRequest.from_image(fixture_image(shape))
        sim = offload_call(endpoint, request, models=models)
        sock = offload_call(endpoint, request, mode="socket")
        assert sim.response == sock.response
    request = AsrRequest(8000, concatenate_chunks(synthesize_audio(["left"], seed=8)))
    sim = offload_call(endpoint, request, models=models)
    sock = offload_call(endpoint, request, mode="socket")
    assert sim.response.text == sock.response.text == "left"


def test_socket_offload_call_to_closed_port():
    spare = socket.socket()
    spare.bind(("127.0.0.1", 0))
    port = spare.getsockname()[1]
    spare.close()
    endpoint = lan_fixture(f"127.0.0.1:{port}")
    with pytest.raises(OffloadTransportError):
        offload_call(endpoint, ObjectRequest.from_image(fixture_image("square")), mode="socket", timeout_s=2.0)


def test_sim_offload_call_uses_modeled_latency(models):
    request = ObjectRequest.from_image(fixture_image("square"))
    result = offload_call(lan_fixture(), request, models=models)
    assert result.ok and result.mode == "sim"
    assert result.latency_ms == 100.0
    assert result.response.labels[0][0] == "square"
    wan = wan_fixture()
    latencies = [offload_call(wan, request, index=i, models=models).latency_ms for i in range(20)]
    assert all(500.0 <= ms <= 5000.0 for ms in latencies)
    assert latencies == [offload_call(wan, request, index=i, models=models).latency_ms for i in range(20)]
    assert len(set(latencies)) > 1
    with pytest.raises(ValueError):
        offload_call(lan_fixture(), request, mode="carrier-pigeon", models=models)
    vision_only = Endpoint("v", EndpointKind.LAN_CLOUD, "127.0.0.1:7070", {ServiceId.VISION: LatencyModel(1.0)})
    with pytest.raises(ValueError):
        offload_call(vision_only, AsrRequest(8000, np.zeros(800)), models=models)


def test_latency_model_and_addresses():
    model = LatencyModel(2000.0, 1500.0, 1500.0, seed=3)
    assert model.worst_case_ms == 5000.0
    assert model.best_case_ms == 2000.0
    for i in range(200):
        assert 2000.0 <= model.sample_ms(ServiceId.VISION, i) <= 5000.0
    assert model.sample_ms(ServiceId.VISION, 3) == model.sample_ms("vision", 3)
    assert model.sample_ms(ServiceId.VISION, 3) != model.sample_ms(ServiceId.SPEECH, 3)
    with pytest.raises(ValueError):
        LatencyModel(10.0, 0.0, 20.0)
    with pytest.raises(ValueError):
        LatencyModel(-1.0)
    assert parse_address("127.0.0.1:7070") == ("127.0.0.1", 7070)
    assert parse_address("[::1]:8080") == ("::1", 8080)
    for bad in ("localhost", ":7070", "host:99999"):
        with pytest.raises(ValueError):
            parse_address(bad)
    with pytest.raises(ValueError):
        Endpoint("cloud", EndpointKind.LAN_CLOUD)
    with pytest.raises(ValueError):
        Endpoint("here", EndpointKind.LOCAL, "127.0.0.1:1")


def test_lan_offloads_vision_and_speech_but_not_slam():
    plan = decide_placement(ToleranceTable(), [lan_fixture()])
    assert plan.summary() == {"slam": "local", "vision": "lan", "speech": "lan"}
    assert plan.offloaded_services == [ServiceId.VISION, ServiceId.SPEECH]
    assert plan.placements[ServiceId.VISION].worst_case_ms == 100.0
    assert "rejected lan" in plan.placements[ServiceId.SLAM].rationale


def test_wan_fails_every_tolerance():
    plan = decide_placement(ToleranceTable(), [wan_fixture()])
    assert plan.offloaded_services == []
    both = decide_placement(ToleranceTable(), [wan_fixture(), lan_fixture()])
    assert both.summary() == {"slam": "local", "vision": "lan", "speech": "lan"}


def test_tighter_vision_tolerance_keeps_vision_local():
    plan = decide_placement(ToleranceTable(vision=99.0), [lan_fixture()])
    assert plan.summary()["vision"] == "local"
    assert plan.summary()["speech"] == "lan"


def test_relaxing_tolerances_never_moves_a_service_local():
    rng = np.random.default_rng(41)
    profiles = ProfileTable()
    for _ in range(1000):
        endpoints = [
            Endpoint(f"e{i}", EndpointKind.LAN_CLOUD, f"10.0.0.{i + 1}:7070", {
                s: LatencyModel(float(rng.uniform(0, 400)), float(rng.uniform(0, 400))) for s in ServiceId
                if rng.uniform() < 0.7})
            for i in range(int(rng.integers(1, 4)))
        ]
        tight = ToleranceTable(*rng.uniform(1, 600, 3))
        loose = ToleranceTable(*(tight.for_service(s) + rng.uniform(0, 300) for s in ServiceId))
        tight_plan = decide_placement(tight, endpoints, profiles)
        loose_plan = decide_placement(loose, endpoints, profiles)
        for service in ServiceId:
            tight_local = tight_plan.placements[service].endpoint.is_local
            loose_local = loose_plan.placements[service].endpoint.is_local
            # offloaded stays offloaded when loosened; local stays local when tightened
            assert tight_local or not loose_local
        assert estimate_policy(loose_plan, profiles).power_w <= estimate_policy(tight_plan, profiles).power_w
        for placement in tight_plan.placements.values():
            assert placement.worst_case_ms <= placement.tolerance_ms


def test_offloading_halves_power():
    profiles = ProfileTable()
    offloaded = estimate_policy(decide_placement(ToleranceTable(), [lan_fixture()], profiles), profiles)
    local = all_local_estimate(profiles)
    assert offloaded.power_w == pytest.approx(5.0)
    assert local.power_w == pytest.approx(11.0)
    assert local.power_w / offloaded.power_w >= 2.0
    assert offloaded.battery_hours == pytest.approx(24.0 / 5.0)
    assert local.battery_hours == pytest.approx(24.0 / 11.0)
    assert offloaded.cpu_pct < local.cpu_pct
    assert offloaded.gpu_pct < local.gpu_pct


def test_empty_object_response_frame_size():
    frame = encode_message(ObjectResponse([]))
    assert len(frame) == HEADER_SIZE + 1 == 11
    assert decode_message(frame) == ObjectResponse([])


def test_server_logs_one_line_per_request(server, caplog):
    frame = encode_message(ObjectRequest.from_image(fixture_image("square")))
    with caplog.at_level(logging.INFO, logger="roboserv.offload.server"):
        with socket.create_connection(server.address, timeout=10.0) as sock:
            sock.sendall(frame)
            assert isinstance(read_message(sock), ObjectResponse)
    lines = [r.getMessage() for r in caplog.records if r.getMessage().startswith("type=")]
    assert len(lines) == 1
    assert lines[0].startswith(f"type=obj_request bytes={len(frame)} processing_ns=")
