"""HTTP client for capability backends: retry policy plus semantic checks.

Transport failures and 5xx answers are retried with exponential backoff
(backoff_base_ms * 2^attempt) up to max_retries retries; 4xx answers are
never retried. Responses are schema-validated, then checked against the
request (phrase echo, bounds, counts) before anything reaches a pipeline.
"""

from __future__ import annotations

import time
from typing import Callable, Optional, Sequence

import httpx

from ..errors import (
    BackendUnreachableError,
    InvalidBoxError,
    MalformedRLEError,
    NonRetryableStatusError,
    ProtocolViolationError,
)
from ..geometry import Box, ScoredBox
from ..rlemask import RLEMask
from .types import BackendEndpoint, Capability, ImagePayload, MeshParams
from .wire import ROUTES, WIRE_VERSION, validate_response

__all__ = ["RemoteBackend"]


class RemoteBackend:
    """Speaks the v1 wire protocol to one base URL.

    Safe for concurrent use: the underlying httpx client supports multiple
    in-flight requests and this class keeps no per-call state.
    """

    def __init__(
        self,
        endpoint: BackendEndpoint,
        *,
        transport: Optional[httpx.BaseTransport] = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.endpoint = endpoint
        self._sleep = sleep
        self._client = httpx.Client(
            base_url=endpoint.base_url,
            timeout=httpx.Timeout(endpoint.timeout_ms / 1000.0),
            transport=transport,
        )

    @property
    def identity(self) -> str:
        return self.endpoint.base_url

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "RemoteBackend":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- transport ------------------------------------------------------

    def _post(self, route: str, body: dict) -> dict:
        endpoint = self.endpoint
        attempts = 0
        while True:
            attempts += 1
            failure: str
            try:
                response = self._client.post(route, json=body)
            except httpx.TransportError as exc:
                failure = f"transport error: {exc!r}"
            else:
                if response.status_code < 400:
                    try:
                        return response.json()
                    except ValueError as exc:
                        raise ProtocolViolationError(
                            f"{route}: response body is not JSON: {exc}"
                        ) from exc
                if response.status_code < 500:
                    code, message = _error_body(response)
                    raise NonRetryableStatusError(response.status_code, code, message)
                failure = f"status {response.status_code}"
            if attempts > endpoint.max_retries:
                raise BackendUnreachableError(
                    f"{endpoint.base_url}{route}: giving up after {attempts} attempts "
                    f"(last failure: {failure})"
                )
            self._sleep(endpoint.backoff_base_ms * (2 ** (attempts - 1)) / 1000.0)

    def _call(self, capability: Capability, body: dict) -> dict:
        body = {"version": WIRE_VERSION, **body}
        return validate_response(capability, self._post(ROUTES[capability], body))

    # -- capabilities ----------------------------------------------------

    def detect(
        self, image: ImagePayload, phrases: Sequence[str], box_threshold: float
    ) -> list[ScoredBox]:
        doc = self._call(
            Capability.DETECTOR,
            {
                "image": image.to_wire(),
                "phrases": list(phrases),
                "box_threshold": box_threshold,
            },
        )
        wanted = {p.strip().lower() for p in phrases}
        out = []
        for det in doc["detections"]:
            try:
                box = Box.from_list(det["box"])
            except InvalidBoxError as exc:
                raise ProtocolViolationError(f"detector returned a bad box: {exc}") from exc
            if det["score"] < box_threshold:
                raise ProtocolViolationError(
                    f"detector returned score {det['score']} below threshold {box_threshold}"
                )
            if det["phrase"].strip().lower() not in wanted:
                raise ProtocolViolationError(
                    f"detector returned phrase {det['phrase']!r} absent from the request"
                )
            if box.x1 < 0 or box.y1 < 0 or box.x2 > image.width or box.y2 > image.height:
                raise ProtocolViolationError(
                    f"detector box {box.to_list()} outside {image.width}x{image.height}"
                )
            out.append(ScoredBox(box=box, phrase=det["phrase"], score=det["score"]))
        return out

    def segment(self, image: ImagePayload, boxes: Sequence[Box]) -> list[RLEMask]:
        doc = self._call(
            Capability.SEGMENTER,
            {"image": image.to_wire(), "boxes": [b.to_list() for b in boxes]},
        )
        masks_wire = doc["masks"]
        if len(masks_wire) != len(boxes):
            raise ProtocolViolationError(
                f"segmenter answered {len(masks_wire)} masks for {len(boxes)} prompts"
            )
        masks = []
        for obj in masks_wire:
            try:
                mask = RLEMask.from_wire(obj)
            except MalformedRLEError as exc:
                raise ProtocolViolationError(f"segmenter returned bad RLE: {exc}") from exc
            if mask.size != (image.height, image.width):
                raise ProtocolViolationError(
                    f"segmenter mask is {mask.size}, image is "
                    f"{(image.height, image.width)}"
                )
            masks.append(mask)
        return masks

    def tag(self, image: ImagePayload) -> list[str]:
        doc = self._call(Capability.TAGGER, {"image": image.to_wire()})
        tags = doc["tags"]
        if len(set(tags)) != len(tags):
            raise ProtocolViolationError(f"tagger returned duplicate tags: {tags}")
        return list(tags)

    def caption(self, image: ImagePayload) -> str:
        return self._call(Capability.CAPTIONER, {"image": image.to_wire()})["caption"]

    def inpaint(self, image: ImagePayload, region: RLEMask, prompt: str) -> ImagePayload:
        doc = self._call(
            Capability.INPAINTER,
            {"image": image.to_wire(), "region": region.to_wire(), "prompt": prompt},
        )
        edited = ImagePayload.from_wire(doc["image"])
        if (edited.width, edited.height) != (image.width, image.height):
            raise ProtocolViolationError(
                f"inpainter changed dimensions: {edited.width}x{edited.height}"
            )
        return edited

    def recover_mesh(self, image: ImagePayload, person_box: Box) -> MeshParams:
        doc = self._call(
            Capability.MESH_RECOVERER,
            {"image": image.to_wire(), "box": person_box.to_list()},
        )
        params = doc["params"]
        if len(params) != doc["param_length"]:
            raise ProtocolViolationError(
                f"mesh backend declared {doc['param_length']} params, sent {len(params)}"
            )
        return MeshParams(
            params=tuple(float(p) for p in params), box=Box.from_list(doc["box"])
        )


def _error_body(response: httpx.Response) -> tuple[str, str]:
    try:
        doc = response.json()
        return str(doc.get("error", "unknown")), str(doc.get("message", ""))
    except ValueError:
        return "unknown", response.text[:200]
