"""COCO-format dataset export/import and the human-review verdict store."""

from .coco import (
    ImageRecord,
    export_coco,
    ground_truth_document,
    import_coco,
    validate_document,
)
from .review import ReviewStore, ReviewVerdict, filtered_export

__all__ = [
    "ImageRecord",
    "export_coco",
    "ground_truth_document",
    "import_coco",
    "validate_document",
    "ReviewStore",
    "ReviewVerdict",
    "filtered_export",
]
