"""Automatic dense annotation: tags or captions drive detect+segment."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

from ..annotations import InstanceAnnotation, Provenance
from ..backends.types import BackendSet, Capability, ImagePayload
from ..errors import PipelineStageError, VispipeError
from ..store.coco import ImageRecord, export_coco
from .grounded import GroundedSamConfig, backend_identity, run_grounded_sam

__all__ = ["AutoAnnotateResult", "ImageFailure", "phrases_from_caption", "run_auto_annotate"]

_CAPTION_PREFIX = "a photo of"


def phrases_from_caption(caption: str) -> list[str]:
    """Split a caption into phrases: strip the stock prefix, cut on ' and '."""
    text = caption.strip()
    if text.lower() == "a photo":
        return []
    if text.lower().startswith(_CAPTION_PREFIX):
        text = text[len(_CAPTION_PREFIX) :]
    phrases = [p.strip() for p in text.split(" and ")]
    return [p for p in phrases if p]


@dataclass(frozen=True)
class ImageFailure:
    image_id: str
    stage: str
    message: str


@dataclass
class AutoAnnotateResult:
    document: dict
    annotations: list[InstanceAnnotation]
    failures: list[ImageFailure] = field(default_factory=list)


def run_auto_annotate(
    images: Sequence[ImagePayload],
    source: Capability | Sequence[str],
    cfg: GroundedSamConfig,
    backends: BackendSet,
    *,
    continue_on_error: bool = False,
    workers: Optional[int] = None,
    seed: Optional[int] = None,
    timestamp: Optional[str] = None,
) -> AutoAnnotateResult:
    """Tag (or caption) each image, then ground-and-segment the phrases.

    `source` is the tagger capability, the captioner capability, or a
    fixed phrase list (batch grounding without a describer). Images run
    in parallel on a bounded pool; results merge in image-id order so the
    output document is deterministic however threads land. Per-image
    failures either abort the run or, with continue_on_error, drop the
    image from the document and land in the failure log.
    """
    if not images:
        raise VispipeError("at least one image is required")
    fixed_phrases: Optional[list[str]] = None
    if isinstance(source, Capability):
        if source not in (Capability.TAGGER, Capability.CAPTIONER):
            raise VispipeError(f"source must be the tagger or the captioner, got {source}")
        describer = backends.require(source)
    else:
        fixed_phrases = [p for p in (s.strip() for s in source) if p]
        if not fixed_phrases:
            raise VispipeError("phrase list must be non-empty")
        describer = None
    if len({p.image_id for p in images}) != len(images):
        raise VispipeError("image ids must be unique")

    detector = backends.require(Capability.DETECTOR)
    segmenter = backends.require(Capability.SEGMENTER)
    pipeline_name = "auto-annotate" if describer is not None else "grounded-sam"

    def process(payload: ImagePayload) -> list[InstanceAnnotation]:
        if fixed_phrases is not None:
            phrases = fixed_phrases
        else:
            try:
                if source == Capability.TAGGER:
                    phrases = describer.tag(payload)
                else:
                    phrases = phrases_from_caption(describer.caption(payload))
            except Exception as exc:
                raise PipelineStageError(source.value, exc) from exc
        if not phrases:
            return []
        return run_grounded_sam(
            payload,
            phrases,
            cfg,
            detector,
            segmenter,
            pipeline_name=pipeline_name,
            extra_backends=(
                {source.value: backend_identity(describer)} if describer else None
            ),
            seed=seed,
            timestamp=timestamp,
        )

    failures: list[ImageFailure] = []
    per_image: dict[str, list[InstanceAnnotation]] = {}
    max_workers = workers or os.cpu_count() or 1
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        futures = {payload.image_id: pool.submit(process, payload) for payload in images}
        for payload in images:
            future = futures[payload.image_id]
            try:
                per_image[payload.image_id] = future.result()
            except Exception as exc:
                if not continue_on_error:
                    raise
                stage = exc.stage if isinstance(exc, PipelineStageError) else "pipeline"
                failures.append(
                    ImageFailure(image_id=payload.image_id, stage=stage, message=str(exc))
                )

    records = [
        ImageRecord(image_id=p.image_id, width=p.width, height=p.height)
        for p in images
        if p.image_id in per_image
    ]
    ordered_annotations = [
        ann for image_id in sorted(per_image) for ann in per_image[image_id]
    ]
    backend_ids = {
        "detector": backend_identity(detector),
        "segmenter": backend_identity(segmenter),
    }
    if describer is not None:
        backend_ids[source.value] = backend_identity(describer)
        source_note = source.value
    else:
        source_note = "phrases:" + ",".join(fixed_phrases)
    provenance = Provenance(
        pipeline=pipeline_name,
        backends=backend_ids,
        config={**cfg.to_json(), "source": source_note},
        seed=seed,
        timestamp=timestamp,
    )
    document = export_coco(ordered_annotations, records, provenance)
    return AutoAnnotateResult(
        document=document, annotations=ordered_annotations, failures=failures
    )
