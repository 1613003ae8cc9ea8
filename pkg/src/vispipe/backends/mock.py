"""Deterministic in-process backends that answer from fixture scenes.

Every response is a pure function of (scene, request, seed): identical
inputs give byte-identical outputs, which is what makes desk-scale
end-to-end oracles possible. The only noise source is the seeded box
jitter, and that is opt-in.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Mapping, Sequence

from ..errors import (
    DimensionMismatchError,
    EmptyClipError,
    UnknownSceneError,
    VispipeError,
)
from ..fixtures import FixtureScene, render_scene
from ..geometry import Box, ScoredBox, box_iou, clip_box
from ..imaging import png_decode, png_encode, prompt_color
from ..rlemask import (
    RLEMask,
    box_to_mask,
    decode_bitmap,
    encode_bitmap,
    mask_area,
    mask_intersect_box,
)
from .types import ImagePayload, MeshParams

__all__ = ["MockBehavior", "MockBackends", "MESH_PARAM_LENGTH"]

MESH_PARAM_LENGTH = 16


@dataclass(frozen=True)
class MockBehavior:
    """Knobs for degradation experiments; defaults are noiseless."""

    seed: int = 0
    jitter_px: float = 0.0
    drop_per_scene: int = 0


def _uniforms(seed: int, scene_id: str, index: int) -> tuple[float, float, float]:
    digest = hashlib.sha256(f"{seed}:{scene_id}:{index}".encode("utf-8")).digest()
    return tuple(
        int.from_bytes(digest[4 * i : 4 * i + 4], "big") / 2**32 for i in range(3)
    )


class MockBackends:
    """All six capabilities, answered from fixture scenes."""

    def __init__(
        self,
        scenes: Mapping[str, FixtureScene],
        behavior: MockBehavior = MockBehavior(),
    ):
        self.scenes = dict(scenes)
        self.behavior = behavior

    @property
    def identity(self) -> str:
        b = self.behavior
        return (
            f"mock:{len(self.scenes)}scenes:seed={b.seed}"
            f":jitter={b.jitter_px}:drop={b.drop_per_scene}"
        )

    def _scene(self, image: ImagePayload) -> FixtureScene:
        if image.scene_id is None:
            raise UnknownSceneError(
                "mock backends answer from fixture scenes; payload carries no scene_id"
            )
        try:
            scene = self.scenes[image.scene_id]
        except KeyError:
            raise UnknownSceneError(f"unknown scene '{image.scene_id}'") from None
        if (scene.width, scene.height) != (image.width, image.height):
            raise DimensionMismatchError(
                f"payload says {image.width}x{image.height}, scene "
                f"'{scene.scene_id}' is {scene.width}x{scene.height}"
            )
        return scene

    def _visible_objects(self, scene: FixtureScene):
        drop = min(self.behavior.drop_per_scene, len(scene.objects))
        return scene.objects[drop:]

    def _jittered_box(self, scene: FixtureScene, index: int, box: Box) -> Box | None:
        amp = self.behavior.jitter_px
        if amp <= 0:
            return box
        u0, u1, u2 = _uniforms(self.behavior.seed, scene.scene_id, index)
        dx, dy, grow = (u0 * 2 - 1) * amp, (u1 * 2 - 1) * amp, u2 * amp
        try:
            return clip_box(
                Box(box.x1 + dx - grow, box.y1 + dy - grow, box.x2 + dx + grow, box.y2 + dy + grow),
                scene.width,
                scene.height,
            )
        except EmptyClipError:
            return None

    # -- capability implementations ------------------------------------

    def detect(
        self, image: ImagePayload, phrases: Sequence[str], box_threshold: float
    ) -> list[ScoredBox]:
        cleaned = [p.strip() for p in phrases]
        if not cleaned or any(not p for p in cleaned):
            raise VispipeError("phrases must be non-empty after trimming")
        wanted = {p.lower() for p in cleaned}
        scene = self._scene(image)
        out: list[ScoredBox] = []
        for index, obj in enumerate(self._visible_objects(scene)):
            if obj.label not in wanted or obj.detect_score < box_threshold:
                continue
            box = self._jittered_box(scene, index, obj.box)
            if box is None:
                continue
            out.append(ScoredBox(box=box, phrase=obj.label, score=obj.detect_score))
        return out

    def segment(self, image: ImagePayload, boxes: Sequence[Box]) -> list[RLEMask]:
        scene = self._scene(image)
        masks: list[RLEMask] = []
        for prompt in boxes:
            if prompt.x1 < 0 or prompt.y1 < 0 or prompt.x2 > scene.width or prompt.y2 > scene.height:
                raise VispipeError(
                    f"prompt box {prompt.to_list()} not clipped to "
                    f"{scene.width}x{scene.height}"
                )
            best = None
            best_iou = 0.0
            for obj in scene.objects:
                iou = box_iou(obj.box, prompt)
                if iou > best_iou:
                    best, best_iou = obj, iou
            if best is None:
                masks.append(box_to_mask(prompt, scene.height, scene.width))
            else:
                masks.append(mask_intersect_box(best.mask, prompt))
        return masks

    def tag(self, image: ImagePayload) -> list[str]:
        scene = self._scene(image)
        return sorted(set(scene.labels()))

    def caption(self, image: ImagePayload) -> str:
        labels = self.tag(image)
        if not labels:
            return "a photo"
        return "a photo of " + " and ".join(labels)

    def inpaint(self, image: ImagePayload, region: RLEMask, prompt: str) -> ImagePayload:
        if region.size != (image.height, image.width):
            raise DimensionMismatchError(
                f"region is {region.size}, image is {(image.height, image.width)}"
            )
        if mask_area(region) == 0:
            return image
        if image.png is not None:
            pixels = png_decode(image.png)
            if pixels.shape[:2] != (image.height, image.width):
                raise DimensionMismatchError(
                    f"PNG decodes to {pixels.shape[:2]}, payload says "
                    f"{(image.height, image.width)}"
                )
            pixels = pixels.copy()
        else:
            pixels = render_scene(self._scene(image))
        bits = decode_bitmap(region).astype(bool)
        pixels[bits] = prompt_color(prompt)
        return ImagePayload(
            image_id=image.image_id,
            width=image.width,
            height=image.height,
            png=png_encode(pixels),
        )

    def recover_mesh(self, image: ImagePayload, person_box: Box) -> MeshParams:
        return MeshParams(params=(0.0,) * MESH_PARAM_LENGTH, box=person_box)
