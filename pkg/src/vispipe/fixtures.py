"""Synthetic fixture scenes: the ground truth mock backends answer from.

A scene is a labeled set of objects, each with a box, a mask, and a
detection confidence. Scenes serialize to JSON and double as exact
end-to-end oracles: a noiseless pipeline run over a scene must reproduce
its objects annotation-for-annotation.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import VispipeError
from .geometry import Box
from .rlemask import RLEMask, decode_bitmap, encode_bitmap, mask_bbox

__all__ = [
    "SceneObject",
    "FixtureScene",
    "load_scene",
    "save_scene",
    "load_scene_dir",
    "generate_scene",
    "generate_suite",
    "render_scene",
    "label_color",
]

BACKGROUND_COLOR = (200, 200, 200)

_VOCAB = [
    "cat",
    "dog",
    "person",
    "car",
    "tree",
    "bottle",
    "chair",
    "bird",
    "zale horrida",
    "person with pink clothes",
]


@dataclass(frozen=True)
class SceneObject:
    label: str
    box: Box
    mask: RLEMask
    detect_score: float


@dataclass(frozen=True)
class FixtureScene:
    scene_id: str
    width: int
    height: int
    objects: tuple[SceneObject, ...]

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise VispipeError(f"scene dimensions must be >= 1: {self.width}x{self.height}")
        for i, obj in enumerate(self.objects):
            if obj.mask.size != (self.height, self.width):
                raise VispipeError(
                    f"scene '{self.scene_id}' object {i}: mask size {obj.mask.size} "
                    f"!= scene size {(self.height, self.width)}"
                )
            if obj.label != obj.label.lower() or not obj.label.strip():
                raise VispipeError(
                    f"scene '{self.scene_id}' object {i}: label must be non-empty lowercase"
                )
            if not (0.0 <= obj.detect_score <= 1.0):
                raise VispipeError(
                    f"scene '{self.scene_id}' object {i}: detect_score out of [0,1]"
                )
            tight = mask_bbox(obj.mask)
            if tight is None:
                raise VispipeError(f"scene '{self.scene_id}' object {i}: empty mask")
            if not (
                obj.box.x1 <= tight.x1
                and obj.box.y1 <= tight.y1
                and tight.x2 <= obj.box.x2
                and tight.y2 <= obj.box.y2
            ):
                raise VispipeError(
                    f"scene '{self.scene_id}' object {i}: mask spills outside its box"
                )

    def labels(self) -> list[str]:
        return [obj.label for obj in self.objects]

    def to_json(self) -> dict:
        return {
            "scene_id": self.scene_id,
            "width": self.width,
            "height": self.height,
            "objects": [
                {
                    "label": obj.label,
                    "box": obj.box.to_list(),
                    "mask": obj.mask.to_wire(),
                    "detect_score": obj.detect_score,
                }
                for obj in self.objects
            ],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "FixtureScene":
        try:
            objects = tuple(
                SceneObject(
                    label=o["label"],
                    box=Box.from_list(o["box"]),
                    mask=RLEMask.from_wire(o["mask"]),
                    detect_score=float(o["detect_score"]),
                )
                for o in doc["objects"]
            )
            return cls(
                scene_id=doc["scene_id"],
                width=int(doc["width"]),
                height=int(doc["height"]),
                objects=objects,
            )
        except (KeyError, TypeError) as exc:
            raise VispipeError(f"malformed scene document: {exc}") from exc


def load_scene(path: str | Path) -> FixtureScene:
    with open(path, "r", encoding="utf-8") as fh:
        return FixtureScene.from_json(json.load(fh))


def save_scene(scene: FixtureScene, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scene.to_json(), indent=1), encoding="utf-8")


def load_scene_dir(directory: str | Path) -> dict[str, FixtureScene]:
    """Load every *.json scene in a directory, keyed by scene id."""
    scenes: dict[str, FixtureScene] = {}
    paths = sorted(Path(directory).glob("*.json"))
    if not paths:
        raise VispipeError(f"no scene files (*.json) found under {directory}")
    for path in paths:
        scene = load_scene(path)
        if scene.scene_id in scenes:
            raise VispipeError(f"duplicate scene id '{scene.scene_id}' in {directory}")
        scenes[scene.scene_id] = scene
    return scenes


def _ellipse_bits(height: int, width: int, r0: int, r1: int, c0: int, c1: int) -> np.ndarray:
    rows = np.arange(height)[:, None]
    cols = np.arange(width)[None, :]
    cy, cx = (r0 + r1 - 1) / 2.0, (c0 + c1 - 1) / 2.0
    ry, rx = max((r1 - r0) / 2.0, 0.6), max((c1 - c0) / 2.0, 0.6)
    return ((rows - cy) / ry) ** 2 + ((cols - cx) / rx) ** 2 <= 1.0


def generate_scene(
    scene_id: str,
    seed: int,
    *,
    width: int = 128,
    height: int = 96,
    num_objects: int = 4,
    vocab: Iterable[str] = tuple(_VOCAB[:8]),
) -> FixtureScene:
    """Deterministically build a scene of disjoint rectangle/ellipse objects.

    Objects live in separate grid cells so overlapping same-label boxes
    never trip suppression during noiseless pipeline runs.
    """
    rng = random.Random(f"{scene_id}:{seed}")
    vocab = list(vocab)
    cols = int(np.ceil(np.sqrt(num_objects)))
    rows = int(np.ceil(num_objects / cols))
    cell_w, cell_h = width // cols, height // rows
    if cell_w < 8 or cell_h < 8:
        raise VispipeError(
            f"scene {width}x{height} too small for {num_objects} objects"
        )
    objects = []
    for i in range(num_objects):
        cell_r, cell_c = divmod(i, cols)
        # sub-box inside the cell, 1px margin so neighbours stay disjoint
        x_lo, y_lo = cell_c * cell_w + 1, cell_r * cell_h + 1
        w = rng.randint(5, cell_w - 3)
        h = rng.randint(5, cell_h - 3)
        x0 = rng.randint(x_lo, x_lo + cell_w - w - 2)
        y0 = rng.randint(y_lo, y_lo + cell_h - h - 2)
        bits = np.zeros((height, width), dtype=bool)
        if rng.random() < 0.5:
            bits[y0 : y0 + h, x0 : x0 + w] = True
        else:
            bits[y0 : y0 + h, x0 : x0 + w] = _ellipse_bits(h, w, 0, h, 0, w)
        mask = encode_bitmap(bits)
        box = mask_bbox(mask)
        assert box is not None
        objects.append(
            SceneObject(
                label=rng.choice(vocab),
                box=box,
                mask=mask,
                detect_score=round(rng.uniform(0.5, 0.95), 4),
            )
        )
    return FixtureScene(scene_id=scene_id, width=width, height=height, objects=tuple(objects))


def generate_suite(
    seed: int,
    *,
    num_scenes: int = 6,
    objects_per_scene: int = 4,
    width: int = 128,
    height: int = 96,
) -> dict[str, FixtureScene]:
    """A deterministic suite of scenes, keyed by scene id."""
    return {
        scene.scene_id: scene
        for scene in (
            generate_scene(
                f"scene-{i:03d}",
                seed,
                width=width,
                height=height,
                num_objects=objects_per_scene,
            )
            for i in range(num_scenes)
        )
    }


def label_color(label: str) -> tuple[int, int, int]:
    """Stable RGB color for a label, derived from a hash."""
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return (digest[0], digest[1], digest[2])


def render_scene(scene: FixtureScene) -> np.ndarray:
    """Deterministic HxWx3 uint8 rendering: flat background, hashed colors.

    Later objects paint over earlier ones, mirroring scene order.
    """
    img = np.empty((scene.height, scene.width, 3), dtype=np.uint8)
    img[:, :] = BACKGROUND_COLOR
    for obj in scene.objects:
        bits = decode_bitmap(obj.mask).astype(bool)
        img[bits] = label_color(obj.label)
    return img
