"""The detect-then-segment pipeline every other pipeline builds on."""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import datetime, timezone
from typing import Mapping, Optional, Sequence

from ..annotations import InstanceAnnotation, Provenance
from ..backends.types import ImagePayload
from ..errors import (
    EmptyClipError,
    PipelineStageError,
    ProtocolViolationError,
    VispipeError,
)
from ..geometry import ScoredBox, clip_box, nms
from ..rlemask import RLEMask

__all__ = ["GroundedSamConfig", "run_grounded_sam", "backend_identity"]


@dataclass(frozen=True)
class GroundedSamConfig:
    box_threshold: float = 0.30
    nms_iou: float = 0.5
    nms_enabled: bool = True
    class_aware_nms: bool = True
    max_detections: int = 100

    def __post_init__(self):
        for name in ("box_threshold", "nms_iou"):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                raise VispipeError(f"{name} out of [0,1]: {value}")
        if self.max_detections < 1:
            raise VispipeError(f"max_detections must be >= 1: {self.max_detections}")

    def to_json(self) -> dict:
        return {
            "box_threshold": self.box_threshold,
            "nms_iou": self.nms_iou,
            "nms_enabled": self.nms_enabled,
            "class_aware_nms": self.class_aware_nms,
            "max_detections": self.max_detections,
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "GroundedSamConfig":
        known = {k: doc[k] for k in cls().to_json() if k in doc}
        unknown = set(doc) - set(cls().to_json())
        if unknown:
            raise VispipeError(f"unknown config keys: {sorted(unknown)}")
        return cls(**known)


def backend_identity(backend: object) -> str:
    return getattr(backend, "identity", repr(backend))


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def run_grounded_sam(
    image: ImagePayload,
    phrases: Sequence[str],
    cfg: GroundedSamConfig,
    detector,
    segmenter,
    *,
    pipeline_name: str = "grounded-sam",
    extra_backends: Optional[Mapping[str, str]] = None,
    seed: Optional[int] = None,
    timestamp: Optional[str] = None,
) -> list[InstanceAnnotation]:
    """Detect phrases, prompt the segmenter with the surviving boxes.

    Sequence: detect -> clip (dropping boxes left empty) -> optional NMS
    -> truncate to max_detections by score -> segment -> assemble. The
    annotation score is the detection score; output is score-descending.
    Backend failures carry the failing stage's name.
    """
    if not phrases or all(not p.strip() for p in phrases):
        raise VispipeError("phrases must be non-empty")

    try:
        detections = detector.detect(image, list(phrases), cfg.box_threshold)
    except Exception as exc:
        raise PipelineStageError("detect", exc) from exc

    clipped: list[ScoredBox] = []
    for det in detections:
        try:
            box = clip_box(det.box, image.width, image.height)
        except EmptyClipError:
            continue
        clipped.append(replace(det, box=box))

    if cfg.nms_enabled:
        kept = nms(clipped, cfg.nms_iou, cfg.class_aware_nms)
    else:
        kept = sorted(enumerate(clipped), key=lambda item: (-item[1].score, item[0]))
        kept = [det for _, det in kept]
    kept = kept[: cfg.max_detections]

    masks: list[RLEMask] = []
    if kept:
        try:
            masks = segmenter.segment(image, [d.box for d in kept])
        except Exception as exc:
            raise PipelineStageError("segment", exc) from exc
        if len(masks) != len(kept):
            raise PipelineStageError(
                "segment",
                ProtocolViolationError(
                    f"{len(masks)} masks came back for {len(kept)} box prompts"
                ),
            )

    provenance = Provenance(
        pipeline=pipeline_name,
        backends={
            "detector": backend_identity(detector),
            "segmenter": backend_identity(segmenter),
            **dict(extra_backends or {}),
        },
        config=cfg.to_json(),
        seed=seed,
        timestamp=timestamp or _now_iso(),
    )
    annotations = [
        InstanceAnnotation(
            image_id=image.image_id,
            phrase=det.phrase,
            box=det.box,
            mask=mask,
            score=det.score,
            provenance=provenance,
        ).check_image(image.width, image.height)
        for det, mask in zip(kept, masks)
    ]
    # kept is already score-descending; keep the sort as a guarantee
    annotations.sort(key=lambda a: -a.score)
    return annotations
