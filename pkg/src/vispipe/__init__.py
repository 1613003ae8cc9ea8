"""vispipe: typed pipelines over remote vision-model capabilities.

Compose text-grounded detection, box-promptable segmentation, tagging,
captioning, inpainting, and mesh recovery into checkable pipelines;
produce COCO documents with human review; evaluate with mean AP.
"""

__version__ = "0.1.0"

from .annotations import InstanceAnnotation, Provenance
from .geometry import Box, NormBox, ScoredBox
from .rlemask import RLEMask

__all__ = [
    "Box",
    "NormBox",
    "ScoredBox",
    "RLEMask",
    "InstanceAnnotation",
    "Provenance",
    "__version__",
]
