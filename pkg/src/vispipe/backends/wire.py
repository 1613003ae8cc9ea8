"""The versioned JSON wire protocol spoken between client and backends.

Every body carries a top-level "version": "v1". Boxes travel as
[x1, y1, x2, y2], masks as {"size": [h, w], "counts": [...]}, images as
{"image_id", "width", "height", "png_b64" | "scene_id"}. Error bodies are
{"error": code, "message": text} with status >= 400.
"""

from __future__ import annotations

from typing import Any

import jsonschema

from ..errors import ProtocolViolationError
from .types import Capability

__all__ = [
    "WIRE_VERSION",
    "ROUTES",
    "RESPONSE_SCHEMAS",
    "validate_response",
    "WireRequestError",
]

WIRE_VERSION = "v1"

ROUTES = {
    Capability.DETECTOR: "/v1/detect",
    Capability.SEGMENTER: "/v1/segment",
    Capability.TAGGER: "/v1/tag",
    Capability.CAPTIONER: "/v1/caption",
    Capability.INPAINTER: "/v1/inpaint",
    Capability.MESH_RECOVERER: "/v1/mesh",
}

_BOX = {
    "type": "array",
    "items": {"type": "number"},
    "minItems": 4,
    "maxItems": 4,
}

_MASK = {
    "type": "object",
    "required": ["size", "counts"],
    "properties": {
        "size": {
            "type": "array",
            "items": {"type": "integer", "minimum": 1},
            "minItems": 2,
            "maxItems": 2,
        },
        "counts": {
            "type": "array",
            "items": {"type": "integer", "minimum": 0},
            "minItems": 1,
        },
    },
}

_IMAGE = {
    "type": "object",
    "required": ["image_id", "width", "height"],
    "properties": {
        "image_id": {"type": "string", "minLength": 1},
        "width": {"type": "integer", "minimum": 1},
        "height": {"type": "integer", "minimum": 1},
        "png_b64": {"type": "string"},
        "scene_id": {"type": "string"},
    },
}

_VERSION = {"const": WIRE_VERSION}

RESPONSE_SCHEMAS: dict[Capability, dict] = {
    Capability.DETECTOR: {
        "type": "object",
        "required": ["version", "detections"],
        "properties": {
            "version": _VERSION,
            "detections": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["box", "phrase", "score"],
                    "properties": {
                        "box": _BOX,
                        "phrase": {"type": "string", "minLength": 1},
                        "score": {"type": "number", "minimum": 0, "maximum": 1},
                    },
                },
            },
        },
    },
    Capability.SEGMENTER: {
        "type": "object",
        "required": ["version", "masks"],
        "properties": {"version": _VERSION, "masks": {"type": "array", "items": _MASK}},
    },
    Capability.TAGGER: {
        "type": "object",
        "required": ["version", "tags"],
        "properties": {
            "version": _VERSION,
            "tags": {"type": "array", "items": {"type": "string", "minLength": 1}},
        },
    },
    Capability.CAPTIONER: {
        "type": "object",
        "required": ["version", "caption"],
        "properties": {"version": _VERSION, "caption": {"type": "string"}},
    },
    Capability.INPAINTER: {
        "type": "object",
        "required": ["version", "image"],
        "properties": {"version": _VERSION, "image": _IMAGE},
    },
    Capability.MESH_RECOVERER: {
        "type": "object",
        "required": ["version", "params", "param_length", "box"],
        "properties": {
            "version": _VERSION,
            "params": {"type": "array", "items": {"type": "number"}},
            "param_length": {"type": "integer", "minimum": 1},
            "box": _BOX,
        },
    },
}


def validate_response(capability: Capability, doc: Any) -> dict:
    """Check a response body against the capability's schema.

    Raises ProtocolViolationError with the schema path on failure.
    """
    try:
        jsonschema.validate(doc, RESPONSE_SCHEMAS[capability])
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ProtocolViolationError(
            f"{capability.value} response failed schema check at {path}: {exc.message}"
        ) from exc
    return doc


class WireRequestError(Exception):
    """Server-side rejection of a request body; maps to a 4xx status."""

    def __init__(self, code: str, message: str, status: int = 400):
        super().__init__(message)
        self.code = code
        self.message = message
        self.status = status
