import json

import httpx
import pytest

from vispipe.backends import BackendEndpoint, Capability, ImagePayload, RemoteBackend
from vispipe.errors import (
    BackendUnreachableError,
    NonRetryableStatusError,
    ProtocolViolationError,
)
from vispipe.geometry import Box
from vispipe.rlemask import RLEMask


def endpoint(capability=Capability.SEGMENTER, max_retries=2):
    return BackendEndpoint(
        capability=capability,
        base_url="http://backend.test",
        timeout_ms=1000,
        max_retries=max_retries,
        backoff_base_ms=40,
    )


def image():
    return ImagePayload(image_id="img", width=4, height=4, scene_id="s")


class ScriptedServer:
    """Plays back a fixed list of responses/exceptions, counting calls."""

    def __init__(self, script):
        self.script = list(script)
        self.requests = []

    def transport(self):
        def handler(request: httpx.Request) -> httpx.Response:
            self.requests.append(json.loads(request.content))
            action = self.script.pop(0)
            if isinstance(action, Exception):
                raise action
            status, body = action
            return httpx.Response(status, json=body)

        return httpx.MockTransport(handler)


def make_client(server, ep=None, sleeps=None):
    record = sleeps if sleeps is not None else []
    return RemoteBackend(ep or endpoint(), transport=server.transport(), sleep=record.append)


def segment_ok_body(n=1):
    return {"version": "v1", "masks": [RLEMask(4, 4, (0, 16)).to_wire()] * n}


class TestRetryPolicy:
    def test_success_first_attempt(self):
        server = ScriptedServer([(200, segment_ok_body())])
        sleeps = []
        client = make_client(server, sleeps=sleeps)
        masks = client.segment(image(), [Box(0, 0, 4, 4)])
        assert len(masks) == 1
        assert len(server.requests) == 1
        assert sleeps == []

    def test_503_then_200(self):
        server = ScriptedServer(
            [(503, {"error": "busy", "message": "try later"}), (200, segment_ok_body())]
        )
        sleeps = []
        client = make_client(server, sleeps=sleeps)
        client.segment(image(), [Box(0, 0, 4, 4)])
        assert len(server.requests) == 2
        assert sleeps == [0.04]

    def test_timeouts_exhaust_budget(self):
        server = ScriptedServer(
            [httpx.ConnectTimeout("slow"), httpx.ConnectTimeout("slow"), httpx.ConnectTimeout("slow")]
        )
        sleeps = []
        client = make_client(server, sleeps=sleeps)
        with pytest.raises(BackendUnreachableError, match="3 attempts"):
            client.segment(image(), [Box(0, 0, 4, 4)])
        assert len(server.requests) == 3  # min(failures, max_retries) + 1
        assert sleeps == [0.04, 0.08]  # backoff_base * 2^attempt

    def test_4xx_never_retried(self):
        server = ScriptedServer([(404, {"error": "unknown-scene", "message": "nope"})])
        client = make_client(server)
        with pytest.raises(NonRetryableStatusError) as excinfo:
            client.segment(image(), [Box(0, 0, 4, 4)])
        assert len(server.requests) == 1
        assert excinfo.value.status_code == 404
        assert excinfo.value.code == "unknown-scene"

    def test_zero_retries(self):
        server = ScriptedServer([(500, {})])
        client = make_client(server, ep=endpoint(max_retries=0))
        with pytest.raises(BackendUnreachableError):
            client.segment(image(), [Box(0, 0, 4, 4)])
        assert len(server.requests) == 1

    def test_request_carries_version(self):
        server = ScriptedServer([(200, segment_ok_body())])
        client = make_client(server)
        client.segment(image(), [Box(0, 0, 4, 4)])
        assert server.requests[0]["version"] == "v1"


class TestProtocolChecks:
    def test_schema_violation(self):
        server = ScriptedServer([(200, {"version": "v1", "masks": "nope"})])
        with pytest.raises(ProtocolViolationError, match="schema"):
            make_client(server).segment(image(), [Box(0, 0, 4, 4)])

    def test_version_mismatch(self):
        server = ScriptedServer([(200, {"version": "v2", "masks": []})])
        with pytest.raises(ProtocolViolationError):
            make_client(server).segment(image(), [])

    def test_segment_count_mismatch(self):
        server = ScriptedServer([(200, segment_ok_body(n=1))])
        with pytest.raises(ProtocolViolationError, match="1 masks for 2 prompts"):
            make_client(server).segment(image(), [Box(0, 0, 4, 4), Box(1, 1, 3, 3)])

    def test_segment_wrong_mask_size(self):
        body = {"version": "v1", "masks": [RLEMask(2, 2, (4,)).to_wire()]}
        server = ScriptedServer([(200, body)])
        with pytest.raises(ProtocolViolationError, match="mask is"):
            make_client(server).segment(image(), [Box(0, 0, 4, 4)])

    def test_non_json_response(self):
        def handler(request):
            return httpx.Response(200, content=b"<html>oops</html>")

        client = RemoteBackend(endpoint(), transport=httpx.MockTransport(handler), sleep=lambda s: None)
        with pytest.raises(ProtocolViolationError, match="not JSON"):
            client.segment(image(), [])

    def test_detect_score_below_threshold(self):
        body = {
            "version": "v1",
            "detections": [{"box": [0, 0, 2, 2], "phrase": "cat", "score": 0.1}],
        }
        server = ScriptedServer([(200, body)])
        client = make_client(server, ep=endpoint(Capability.DETECTOR))
        with pytest.raises(ProtocolViolationError, match="below threshold"):
            client.detect(image(), ["cat"], 0.5)

    def test_detect_unrequested_phrase(self):
        body = {
            "version": "v1",
            "detections": [{"box": [0, 0, 2, 2], "phrase": "emu", "score": 0.9}],
        }
        server = ScriptedServer([(200, body)])
        client = make_client(server, ep=endpoint(Capability.DETECTOR))
        with pytest.raises(ProtocolViolationError, match="absent from the request"):
            client.detect(image(), ["cat"], 0.5)

    def test_detect_out_of_bounds_box(self):
        body = {
            "version": "v1",
            "detections": [{"box": [0, 0, 9, 2], "phrase": "cat", "score": 0.9}],
        }
        server = ScriptedServer([(200, body)])
        client = make_client(server, ep=endpoint(Capability.DETECTOR))
        with pytest.raises(ProtocolViolationError, match="outside"):
            client.detect(image(), ["cat"], 0.5)

    def test_mesh_length_mismatch(self):
        body = {"version": "v1", "params": [0.0, 0.0], "param_length": 3, "box": [0, 0, 2, 2]}
        server = ScriptedServer([(200, body)])
        client = make_client(server, ep=endpoint(Capability.MESH_RECOVERER))
        with pytest.raises(ProtocolViolationError, match="declared 3"):
            client.recover_mesh(image(), Box(0, 0, 2, 2))

    def test_tagger_duplicates(self):
        body = {"version": "v1", "tags": ["cat", "cat"]}
        server = ScriptedServer([(200, body)])
        client = make_client(server, ep=endpoint(Capability.TAGGER))
        with pytest.raises(ProtocolViolationError, match="duplicate"):
            client.tag(image())
