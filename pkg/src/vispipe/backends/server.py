"""HTTP face of the mock backends: all six capability routes on one app."""

from __future__ import annotations

from typing import Any, Mapping

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..errors import (
    DimensionMismatchError,
    InvalidBoxError,
    MalformedRLEError,
    UnknownSceneError,
    VispipeError,
)
from ..fixtures import FixtureScene
from ..geometry import Box
from ..rlemask import RLEMask
from .mock import MockBackends, MockBehavior
from .types import ImagePayload
from .wire import WIRE_VERSION, WireRequestError

__all__ = ["create_mock_server"]


def _require(doc: Mapping, key: str) -> Any:
    if key not in doc:
        raise WireRequestError("malformed-request", f"missing field '{key}'")
    return doc[key]


def _check_version(doc: Mapping) -> None:
    version = _require(doc, "version")
    if version != WIRE_VERSION:
        raise WireRequestError(
            "unsupported-version", f"expected version '{WIRE_VERSION}', got {version!r}"
        )


def _parse_image(doc: Mapping) -> ImagePayload:
    try:
        return ImagePayload.from_wire(dict(_require(doc, "image")))
    except VispipeError as exc:
        raise WireRequestError("malformed-request", str(exc)) from exc


def _parse_box(raw: Any) -> Box:
    try:
        return Box.from_list(raw)
    except (InvalidBoxError, TypeError) as exc:
        raise WireRequestError("invalid-box", str(exc)) from exc


def _parse_mask(raw: Any) -> RLEMask:
    try:
        return RLEMask.from_wire(raw)
    except MalformedRLEError as exc:
        raise WireRequestError("malformed-rle", str(exc)) from exc


def create_mock_server(
    scenes: Mapping[str, FixtureScene],
    behavior: MockBehavior = MockBehavior(),
) -> FastAPI:
    backends = MockBackends(scenes, behavior)
    app = FastAPI(title="vispipe mock backends", docs_url=None, redoc_url=None)

    @app.exception_handler(WireRequestError)
    async def _wire_error(_req: Request, exc: WireRequestError):
        return JSONResponse(
            status_code=exc.status, content={"error": exc.code, "message": exc.message}
        )

    @app.exception_handler(VispipeError)
    async def _domain_error(_req: Request, exc: VispipeError):
        status = 404 if isinstance(exc, UnknownSceneError) else 400
        code = {
            UnknownSceneError: "unknown-scene",
            DimensionMismatchError: "dimension-mismatch",
            InvalidBoxError: "invalid-box",
            MalformedRLEError: "malformed-rle",
        }.get(type(exc), "bad-request")
        return JSONResponse(status_code=status, content={"error": code, "message": str(exc)})

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok", "scenes": len(backends.scenes), "identity": backends.identity}

    @app.post("/v1/detect")
    async def detect(doc: dict):
        _check_version(doc)
        image = _parse_image(doc)
        phrases = _require(doc, "phrases")
        threshold = float(_require(doc, "box_threshold"))
        if not isinstance(phrases, list) or not all(isinstance(p, str) for p in phrases):
            raise WireRequestError("malformed-request", "phrases must be a string array")
        detections = backends.detect(image, phrases, threshold)
        return {
            "version": WIRE_VERSION,
            "detections": [
                {"box": d.box.to_list(), "phrase": d.phrase, "score": d.score}
                for d in detections
            ],
        }

    @app.post("/v1/segment")
    async def segment(doc: dict):
        _check_version(doc)
        image = _parse_image(doc)
        boxes = [_parse_box(raw) for raw in _require(doc, "boxes")]
        masks = backends.segment(image, boxes)
        return {"version": WIRE_VERSION, "masks": [m.to_wire() for m in masks]}

    @app.post("/v1/tag")
    async def tag(doc: dict):
        _check_version(doc)
        return {"version": WIRE_VERSION, "tags": backends.tag(_parse_image(doc))}

    @app.post("/v1/caption")
    async def caption(doc: dict):
        _check_version(doc)
        return {"version": WIRE_VERSION, "caption": backends.caption(_parse_image(doc))}

    @app.post("/v1/inpaint")
    async def inpaint(doc: dict):
        _check_version(doc)
        image = _parse_image(doc)
        region = _parse_mask(_require(doc, "region"))
        prompt = str(_require(doc, "prompt"))
        edited = backends.inpaint(image, region, prompt)
        return {"version": WIRE_VERSION, "image": edited.to_wire()}

    @app.post("/v1/mesh")
    async def mesh(doc: dict):
        _check_version(doc)
        image = _parse_image(doc)
        box = _parse_box(_require(doc, "box"))
        result = backends.recover_mesh(image, box)
        return {
            "version": WIRE_VERSION,
            "params": list(result.params),
            "param_length": len(result.params),
            "box": result.box.to_list(),
        }

    return app
