"""Domain types shared by the remote client, the mocks, and the pipelines."""

from __future__ import annotations

import base64
import enum
from dataclasses import dataclass
from typing import Optional

from ..errors import VispipeError
from ..geometry import Box

__all__ = ["Capability", "BackendEndpoint", "ImagePayload", "MeshParams", "BackendSet"]


class Capability(str, enum.Enum):
    """The six capability contracts a backend can fulfill."""

    DETECTOR = "detector"
    SEGMENTER = "segmenter"
    TAGGER = "tagger"
    CAPTIONER = "captioner"
    INPAINTER = "inpainter"
    MESH_RECOVERER = "mesh_recoverer"


@dataclass(frozen=True)
class BackendEndpoint:
    """Where a capability lives and how patiently we talk to it."""

    capability: Capability
    base_url: str
    timeout_ms: int = 5000
    max_retries: int = 2
    backoff_base_ms: int = 50

    def __post_init__(self):
        if self.timeout_ms <= 0:
            raise VispipeError(f"timeout_ms must be positive: {self.timeout_ms}")
        if self.max_retries < 0:
            raise VispipeError(f"max_retries must be >= 0: {self.max_retries}")


@dataclass(frozen=True)
class ImagePayload:
    """An image by value (PNG bytes) or by fixture-scene reference.

    Exactly one of `png` / `scene_id` is set. PNG bytes are carried
    opaquely; only backends that need pixels ever look inside.
    """

    image_id: str
    width: int
    height: int
    png: Optional[bytes] = None
    scene_id: Optional[str] = None

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise VispipeError(f"image dimensions must be >= 1: {self.width}x{self.height}")
        if (self.png is None) == (self.scene_id is None):
            raise VispipeError("exactly one of png/scene_id must be set")
        if not self.image_id:
            raise VispipeError("image_id must be non-empty")

    def to_wire(self) -> dict:
        doc: dict = {"image_id": self.image_id, "width": self.width, "height": self.height}
        if self.png is not None:
            doc["png_b64"] = base64.b64encode(self.png).decode("ascii")
        else:
            doc["scene_id"] = self.scene_id
        return doc

    @classmethod
    def from_wire(cls, doc: dict) -> "ImagePayload":
        try:
            png_b64 = doc.get("png_b64")
            return cls(
                image_id=doc["image_id"],
                width=int(doc["width"]),
                height=int(doc["height"]),
                png=base64.b64decode(png_b64) if png_b64 is not None else None,
                scene_id=doc.get("scene_id"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise VispipeError(f"malformed image payload: {exc}") from exc


@dataclass(frozen=True)
class MeshParams:
    """Opaque mesh-recovery vector plus the person box it came from."""

    params: tuple[float, ...]
    box: Box


@dataclass
class BackendSet:
    """One backend object per capability; pipelines pull what they need.

    Any object with the right method shape fits: RemoteBackend instances
    and MockBackends both qualify.
    """

    detector: object = None
    segmenter: object = None
    tagger: object = None
    captioner: object = None
    inpainter: object = None
    mesh_recoverer: object = None

    _FIELDS = {
        Capability.DETECTOR: "detector",
        Capability.SEGMENTER: "segmenter",
        Capability.TAGGER: "tagger",
        Capability.CAPTIONER: "captioner",
        Capability.INPAINTER: "inpainter",
        Capability.MESH_RECOVERER: "mesh_recoverer",
    }

    @classmethod
    def from_single(cls, backend: object) -> "BackendSet":
        """Use one object (e.g. a mock suite) for every capability."""
        return cls(**{name: backend for name in (f for f in cls._FIELDS.values())})

    def require(self, capability: Capability):
        backend = getattr(self, self._FIELDS[capability])
        if backend is None:
            raise VispipeError(f"no backend configured for capability '{capability.value}'")
        return backend

    def identities(self) -> dict[str, str]:
        out = {}
        for cap, name in self._FIELDS.items():
            backend = getattr(self, name)
            if backend is not None:
                out[cap.value] = getattr(backend, "identity", repr(backend))
        return out
