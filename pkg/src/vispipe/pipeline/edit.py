"""Locate-then-inpaint editing: replace or remove phrase-matched regions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from ..annotations import InstanceAnnotation
from ..backends.types import BackendSet, Capability, ImagePayload
from ..errors import PipelineStageError, TargetNotFoundError, VispipeError
from ..rlemask import RLEMask, mask_area, mask_union
from .grounded import GroundedSamConfig, run_grounded_sam

__all__ = ["EditReport", "run_grounded_inpaint", "REMOVE_PROMPT"]

# removal is a special case of replacement: paint the region as background
REMOVE_PROMPT = "background"


@dataclass
class EditReport:
    mode: str
    prompt: str
    matched: list[InstanceAnnotation]
    region: RLEMask
    region_area: int


def run_grounded_inpaint(
    image: ImagePayload,
    target_phrases: Sequence[str],
    mode: str,
    cfg: GroundedSamConfig,
    backends: BackendSet,
    *,
    prompt: Optional[str] = None,
    top_only: bool = False,
    seed: Optional[int] = None,
    timestamp: Optional[str] = None,
) -> tuple[ImagePayload, EditReport]:
    """Find instances of the target phrases and inpaint their mask union.

    replace mode paints `prompt` into the region; remove mode paints
    "background". Raises TargetNotFoundError (and touches nothing) when
    no instance matches.
    """
    if mode not in ("replace", "remove"):
        raise VispipeError(f"mode must be 'replace' or 'remove', got {mode!r}")
    if mode == "replace":
        if not prompt or not prompt.strip():
            raise VispipeError("replace mode needs a non-empty prompt")
        fill_prompt = prompt
    else:
        fill_prompt = REMOVE_PROMPT

    annotations = run_grounded_sam(
        image,
        target_phrases,
        cfg,
        backends.require(Capability.DETECTOR),
        backends.require(Capability.SEGMENTER),
        pipeline_name="grounded-inpaint",
        seed=seed,
        timestamp=timestamp,
    )
    if not annotations:
        raise TargetNotFoundError(
            f"no instance of {list(target_phrases)} found in '{image.image_id}'"
        )
    matched = annotations[:1] if top_only else annotations
    region = mask_union([ann.mask for ann in matched])

    inpainter = backends.require(Capability.INPAINTER)
    try:
        edited = inpainter.inpaint(image, region, fill_prompt)
    except Exception as exc:
        raise PipelineStageError("inpaint", exc) from exc

    report = EditReport(
        mode=mode,
        prompt=fill_prompt,
        matched=matched,
        region=region,
        region_area=mask_area(region),
    )
    return edited, report
