"""Promptable mesh recovery: ground a person phrase, recover each match."""

from __future__ import annotations

from typing import Optional

from ..annotations import InstanceAnnotation
from ..backends.types import BackendSet, Capability, ImagePayload, MeshParams
from ..errors import PipelineStageError, TargetNotFoundError, VispipeError
from .grounded import GroundedSamConfig, run_grounded_sam

__all__ = ["run_promptable_mesh"]


def run_promptable_mesh(
    image: ImagePayload,
    person_phrase: str,
    cfg: GroundedSamConfig,
    backends: BackendSet,
    *,
    seed: Optional[int] = None,
    timestamp: Optional[str] = None,
) -> list[tuple[InstanceAnnotation, MeshParams]]:
    """One (annotation, mesh) pair per matched instance, score-descending.

    A phrase matching several people returns all of them rather than
    guessing which one was meant.
    """
    if not person_phrase or not person_phrase.strip():
        raise VispipeError("person_phrase must be non-empty")
    annotations = run_grounded_sam(
        image,
        [person_phrase],
        cfg,
        backends.require(Capability.DETECTOR),
        backends.require(Capability.SEGMENTER),
        pipeline_name="promptable-mesh",
        seed=seed,
        timestamp=timestamp,
    )
    if not annotations:
        raise TargetNotFoundError(
            f"no instance of {person_phrase!r} found in '{image.image_id}'"
        )
    recoverer = backends.require(Capability.MESH_RECOVERER)
    pairs = []
    for annotation in annotations:
        try:
            params = recoverer.recover_mesh(image, annotation.box)
        except Exception as exc:
            raise PipelineStageError("mesh", exc) from exc
        pairs.append((annotation, params))
    return pairs
