"""Typed pipeline composition and the four built-in pipelines."""

from .annotate import (
    AutoAnnotateResult,
    ImageFailure,
    phrases_from_caption,
    run_auto_annotate,
)
from .edit import EditReport, run_grounded_inpaint
from .grounded import GroundedSamConfig, run_grounded_sam
from .mesh import run_promptable_mesh
from .modality import (
    Binding,
    Modality,
    PipelineSpec,
    SourceRef,
    StageSpec,
    TypedPlan,
    builtin_pipelines,
    load_pipeline_spec,
    registry_tasks,
    validate_pipeline,
)

__all__ = [
    "AutoAnnotateResult",
    "Binding",
    "EditReport",
    "GroundedSamConfig",
    "ImageFailure",
    "Modality",
    "PipelineSpec",
    "SourceRef",
    "StageSpec",
    "TypedPlan",
    "builtin_pipelines",
    "load_pipeline_spec",
    "phrases_from_caption",
    "registry_tasks",
    "run_auto_annotate",
    "run_grounded_inpaint",
    "run_grounded_sam",
    "run_promptable_mesh",
    "validate_pipeline",
]
