import socket
import threading
import time

import httpx
import numpy as np
import pytest
import uvicorn
from fastapi.testclient import TestClient

from vispipe.backends import ImagePayload
from vispipe.fixtures import FixtureScene, SceneObject, generate_suite
from vispipe.geometry import Box
from vispipe.rlemask import encode_bitmap


def rect_mask(height, width, r0, r1, c0, c1):
    bits = np.zeros((height, width), dtype=np.uint8)
    bits[r0:r1, c0:c1] = 1
    return encode_bitmap(bits)


def make_scene(scene_id="pets", width=20, height=20, objects=None):
    if objects is None:
        objects = [
            ("cat", 2, 9, 3, 10, 0.9),
            ("dog", 12, 18, 11, 19, 0.6),
        ]
    built = []
    for label, r0, r1, c0, c1, score in objects:
        mask = rect_mask(height, width, r0, r1, c0, c1)
        built.append(
            SceneObject(
                label=label,
                box=Box(float(c0), float(r0), float(c1), float(r1)),
                mask=mask,
                detect_score=score,
            )
        )
    return FixtureScene(scene_id=scene_id, width=width, height=height, objects=tuple(built))


def payload_for(scene: FixtureScene) -> ImagePayload:
    return ImagePayload(
        image_id=scene.scene_id,
        width=scene.width,
        height=scene.height,
        scene_id=scene.scene_id,
    )


def app_transport(app) -> httpx.MockTransport:
    """Bridge an in-process ASGI app into an httpx transport."""
    test_client = TestClient(app, raise_server_exceptions=False)

    def handler(request: httpx.Request) -> httpx.Response:
        response = test_client.request(
            request.method,
            request.url.path + (f"?{request.url.query.decode()}" if request.url.query else ""),
            content=request.content,
            headers={"content-type": request.headers.get("content-type", "application/json")},
        )
        return httpx.Response(response.status_code, content=response.content, headers=response.headers)

    return httpx.MockTransport(handler)


@pytest.fixture
def pets_scene():
    return make_scene()


@pytest.fixture
def empty_scene():
    return FixtureScene(scene_id="void", width=8, height=8, objects=())


@pytest.fixture(scope="session")
def suite_scenes():
    return generate_suite(seed=0, num_scenes=6, objects_per_scene=4)


def free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


class LiveServer:
    """uvicorn in a daemon thread, for tests that need a real socket."""

    def __init__(self, app, port=None):
        self.port = port or free_port()
        self._server = uvicorn.Server(
            uvicorn.Config(app, host="127.0.0.1", port=self.port, log_level="error")
        )
        self._thread = threading.Thread(target=self._server.run, daemon=True)

    @property
    def url(self) -> str:
        return f"http://127.0.0.1:{self.port}"

    def __enter__(self) -> "LiveServer":
        self._thread.start()
        deadline = time.time() + 10
        while not self._server.started:
            if time.time() > deadline:
                raise RuntimeError("server did not start within 10s")
            time.sleep(0.01)
        return self

    def __exit__(self, *exc):
        self._server.should_exit = True
        self._thread.join(timeout=10)


@pytest.fixture(scope="session")
def live_mock_url(suite_scenes):
    from vispipe.backends.server import create_mock_server

    with LiveServer(create_mock_server(suite_scenes)) as server:
        yield server.url
