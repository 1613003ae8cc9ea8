"""The pipeline's end product: one annotated instance, with provenance."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Optional

from .errors import DimensionMismatchError, VispipeError
from .geometry import Box
from .rlemask import RLEMask

__all__ = ["Provenance", "InstanceAnnotation"]


@dataclass(frozen=True)
class Provenance:
    """Which pipeline/backends/config produced an annotation.

    The timestamp never reaches exported documents, so seeded runs stay
    byte-reproducible.
    """

    pipeline: str
    backends: Mapping[str, str] = field(default_factory=dict)
    config: Mapping[str, object] = field(default_factory=dict)
    seed: Optional[int] = None
    timestamp: Optional[str] = None

    def to_json(self) -> dict:
        return {
            "pipeline": self.pipeline,
            "backends": dict(sorted(self.backends.items())),
            "config": dict(sorted(self.config.items())),
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "Provenance":
        return cls(
            pipeline=doc.get("pipeline", "unknown"),
            backends=dict(doc.get("backends", {})),
            config=dict(doc.get("config", {})),
            seed=doc.get("seed"),
        )


@dataclass(frozen=True)
class InstanceAnnotation:
    image_id: str
    phrase: str
    box: Box
    mask: RLEMask
    score: float
    provenance: Provenance

    def __post_init__(self):
        if not self.phrase:
            raise VispipeError("annotation phrase must be non-empty")
        if not (0.0 <= self.score <= 1.0):
            raise VispipeError(f"annotation score out of [0,1]: {self.score}")

    def check_image(self, width: int, height: int) -> "InstanceAnnotation":
        """Assert the mask matches the source image dimensions."""
        if self.mask.size != (height, width):
            raise DimensionMismatchError(
                f"annotation mask is {self.mask.size}, image '{self.image_id}' "
                f"is {(height, width)}"
            )
        return self

    def with_provenance(self, provenance: Provenance) -> "InstanceAnnotation":
        return replace(self, provenance=provenance)
