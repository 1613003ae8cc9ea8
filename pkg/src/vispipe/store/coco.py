"""COCO-format document export/import.

Documents are plain dicts shaped exactly like the interchange format:
images [{id, width, height, file_name}], annotations [{id, image_id,
category_id, bbox (xywh), segmentation (RLE), area, score?, iscrowd}],
categories [{id, name}], info.provenance. Exports are deterministic:
categories get lexicographic ids, annotations are numbered in
(image id, score-descending) order, and no timestamps are written.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from ..annotations import InstanceAnnotation, Provenance
from ..errors import DimensionMismatchError, MalformedRLEError, StoreError
from ..fixtures import FixtureScene
from ..geometry import Box
from ..rlemask import RLEMask, mask_area, mask_bbox

__all__ = [
    "ImageRecord",
    "export_coco",
    "import_coco",
    "validate_document",
    "ground_truth_document",
]


@dataclass(frozen=True)
class ImageRecord:
    image_id: str
    width: int
    height: int

    @property
    def file_name(self) -> str:
        return f"{self.image_id}.png"


def _tight_xywh(mask: RLEMask) -> tuple[list[float], Box | None]:
    tight = mask_bbox(mask)
    if tight is None:
        return [0.0, 0.0, 0.0, 0.0], None
    return [tight.x1, tight.y1, tight.width, tight.height], tight


def export_coco(
    annotations: Sequence[InstanceAnnotation],
    images: Sequence[ImageRecord],
    provenance: Optional[Provenance] = None,
    *,
    include_scores: bool = True,
) -> dict:
    """Build a COCO document; raises StoreError on unknown image refs."""
    if len({im.image_id for im in images}) != len(images):
        raise StoreError("duplicate image ids in export")
    ordered_images = sorted(images, key=lambda im: im.image_id)
    numeric_id = {im.image_id: i + 1 for i, im in enumerate(ordered_images)}
    by_id = {im.image_id: im for im in images}

    for ann in annotations:
        image = by_id.get(ann.image_id)
        if image is None:
            raise StoreError(f"annotation references unknown image '{ann.image_id}'")
        if ann.mask.size != (image.height, image.width):
            raise DimensionMismatchError(
                f"annotation mask {ann.mask.size} does not fit image "
                f"'{ann.image_id}' ({image.height}, {image.width})"
            )

    category_ids = {
        name: i + 1 for i, name in enumerate(sorted({a.phrase for a in annotations}))
    }
    ordered = sorted(
        enumerate(annotations),
        key=lambda item: (numeric_id[item[1].image_id], -item[1].score, item[0]),
    )
    out_annotations = []
    for seq, (_, ann) in enumerate(ordered, start=1):
        bbox, _ = _tight_xywh(ann.mask)
        entry = {
            "id": seq,
            "image_id": numeric_id[ann.image_id],
            "category_id": category_ids[ann.phrase],
            "bbox": bbox,
            "segmentation": ann.mask.to_wire(),
            "area": mask_area(ann.mask),
            "iscrowd": 0,
        }
        if include_scores:
            entry["score"] = ann.score
        out_annotations.append(entry)

    return {
        "info": {"provenance": provenance.to_json() if provenance else {}},
        "images": [
            {
                "id": numeric_id[im.image_id],
                "width": im.width,
                "height": im.height,
                "file_name": im.file_name,
            }
            for im in ordered_images
        ],
        "annotations": out_annotations,
        "categories": [
            {"id": cid, "name": name} for name, cid in sorted(category_ids.items())
        ],
    }


def validate_document(doc: Mapping) -> None:
    """Re-check every CocoDocument invariant; raises on the first failure."""
    for key in ("images", "annotations", "categories"):
        if not isinstance(doc.get(key), list):
            raise StoreError(f"document is missing the '{key}' array")

    image_ids = set()
    sizes = {}
    for im in doc["images"]:
        for key in ("id", "width", "height", "file_name"):
            if key not in im:
                raise StoreError(f"image entry missing '{key}': {im}")
        if im["id"] in image_ids:
            raise StoreError(f"duplicate image id {im['id']}")
        image_ids.add(im["id"])
        sizes[im["id"]] = (im["height"], im["width"])

    cat_ids = set()
    names = set()
    for cat in doc["categories"]:
        if "id" not in cat or "name" not in cat:
            raise StoreError(f"category entry missing id/name: {cat}")
        if cat["id"] in cat_ids:
            raise StoreError(f"duplicate category id {cat['id']}")
        if cat["name"] in names:
            raise StoreError(f"duplicate category name {cat['name']!r}")
        cat_ids.add(cat["id"])
        names.add(cat["name"])

    ann_ids = set()
    for ann in doc["annotations"]:
        for key in ("id", "image_id", "category_id", "bbox", "segmentation", "area"):
            if key not in ann:
                raise StoreError(f"annotation entry missing '{key}': id={ann.get('id')}")
        if ann["id"] in ann_ids:
            raise StoreError(f"duplicate annotation id {ann['id']}")
        ann_ids.add(ann["id"])
        if ann["image_id"] not in image_ids:
            raise StoreError(
                f"annotation {ann['id']} references unknown image {ann['image_id']}"
            )
        if ann["category_id"] not in cat_ids:
            raise StoreError(
                f"annotation {ann['id']} references unknown category {ann['category_id']}"
            )
        if ann.get("iscrowd", 0) != 0:
            raise StoreError(f"annotation {ann['id']}: crowd regions are not supported")
        bbox = ann["bbox"]
        if len(bbox) != 4 or any(v < 0 for v in bbox):
            raise StoreError(f"annotation {ann['id']}: negative bbox {bbox}")
        mask = RLEMask.from_wire(ann["segmentation"])  # raises MalformedRLEError
        if mask.size != sizes[ann["image_id"]]:
            raise DimensionMismatchError(
                f"annotation {ann['id']}: mask {mask.size} does not match image "
                f"{sizes[ann['image_id']]}"
            )
        if ann["area"] != mask_area(mask):
            raise StoreError(
                f"annotation {ann['id']}: area {ann['area']} != mask area {mask_area(mask)}"
            )
        tight_xywh, tight = _tight_xywh(mask)
        if tight is None:
            if any(v != 0 for v in bbox):
                raise StoreError(
                    f"annotation {ann['id']}: empty mask but non-zero bbox {bbox}"
                )
        elif any(abs(a - b) > 1.0 for a, b in zip(bbox, tight_xywh)):
            raise StoreError(
                f"annotation {ann['id']}: bbox {bbox} disagrees with the mask's "
                f"tight box {tight_xywh} by more than one pixel"
            )
        score = ann.get("score")
        if score is not None and not (0.0 <= score <= 1.0):
            raise StoreError(f"annotation {ann['id']}: score out of [0,1]: {score}")


def _strip_extension(file_name: str) -> str:
    stem, _, _ = file_name.rpartition(".")
    return stem or file_name


def import_coco(doc: Mapping) -> tuple[list[InstanceAnnotation], list[ImageRecord]]:
    """Parse a COCO document back into annotations + image records.

    Inverse of export_coco on the modeled fields. Annotations without a
    score (plain ground truth) come back with score 1.0.
    """
    validate_document(doc)
    provenance = Provenance.from_json(doc.get("info", {}).get("provenance", {}))
    records = {}
    for im in doc["images"]:
        records[im["id"]] = ImageRecord(
            image_id=_strip_extension(im["file_name"]),
            width=im["width"],
            height=im["height"],
        )
    names = {c["id"]: c["name"] for c in doc["categories"]}
    annotations = [
        InstanceAnnotation(
            image_id=records[ann["image_id"]].image_id,
            phrase=names[ann["category_id"]],
            box=_import_box(ann, records[ann["image_id"]]),
            mask=RLEMask.from_wire(ann["segmentation"]),
            score=ann.get("score", 1.0),
            provenance=provenance,
        )
        for ann in doc["annotations"]
    ]
    return annotations, list(records.values())


def _import_box(ann: Mapping, image: ImageRecord) -> Box:
    x, y, w, h = ann["bbox"]
    if w > 0 and h > 0:
        return Box(x, y, x + w, y + h)
    # empty-mask annotation: carry a minimal placeholder box
    return Box(0.0, 0.0, min(1.0, image.width), min(1.0, image.height))


def ground_truth_document(scenes: Mapping[str, FixtureScene]) -> dict:
    """COCO ground truth straight from fixture scenes (no scores)."""
    annotations = []
    images = []
    for scene_id in sorted(scenes):
        scene = scenes[scene_id]
        images.append(ImageRecord(image_id=scene_id, width=scene.width, height=scene.height))
        for obj in scene.objects:
            annotations.append(
                InstanceAnnotation(
                    image_id=scene_id,
                    phrase=obj.label,
                    box=obj.box,
                    mask=obj.mask,
                    score=1.0,
                    provenance=Provenance(pipeline="fixture-gt"),
                )
            )
    return export_coco(
        annotations,
        images,
        Provenance(pipeline="fixture-gt", backends={}, config={}),
        include_scores=False,
    )
