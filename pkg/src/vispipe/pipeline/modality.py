"""Typed composition of capability stages.

A pipeline is a DAG of stages whose ports carry modalities. Composition
is checkable: a binding is legal only when the source port's modality is
compatible with the destination port's. Compatibility is equality plus
two engine-provided text adapters (tag lists and captions both flatten
into phrase text), which is what lets a tagger feed a detector.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional

from ..backends.types import Capability
from ..errors import (
    DuplicateBindingError,
    ModalityMismatchError,
    PipelineCycleError,
    PipelineTypeError,
    UnboundInputError,
)

__all__ = [
    "Modality",
    "CAPABILITY_SIGNATURES",
    "compatible",
    "StageSpec",
    "SourceRef",
    "Binding",
    "PipelineSpec",
    "TypedPlan",
    "validate_pipeline",
    "registry_tasks",
    "builtin_pipelines",
    "load_pipeline_spec",
]


class Modality(str, enum.Enum):
    """Port types; composition is legal only between compatible ports."""

    IMAGE = "image"
    TEXT = "text"
    BOXES = "boxes"
    MASKS = "masks"
    TAGS = "tags"
    CAPTION = "caption"
    ANNOTATIONS = "annotations"
    EDITED_IMAGE = "edited_image"
    MESH = "mesh"


CAPABILITY_SIGNATURES: dict[Capability, tuple[tuple[Modality, ...], tuple[Modality, ...]]] = {
    Capability.DETECTOR: ((Modality.IMAGE, Modality.TEXT), (Modality.BOXES,)),
    Capability.SEGMENTER: ((Modality.IMAGE, Modality.BOXES), (Modality.MASKS,)),
    Capability.TAGGER: ((Modality.IMAGE,), (Modality.TAGS,)),
    Capability.CAPTIONER: ((Modality.IMAGE,), (Modality.CAPTION,)),
    # the inpainting prompt rides in stage config, not on a port
    Capability.INPAINTER: ((Modality.IMAGE, Modality.MASKS), (Modality.EDITED_IMAGE,)),
    Capability.MESH_RECOVERER: ((Modality.IMAGE, Modality.BOXES), (Modality.MESH,)),
}

# engine-provided adapters: these sources may feed a TEXT input
_TEXT_COERCIONS = {Modality.TAGS, Modality.CAPTION}


def compatible(source: Modality, dest: Modality) -> bool:
    if source == dest:
        return True
    return dest == Modality.TEXT and source in _TEXT_COERCIONS


@dataclass(frozen=True)
class StageSpec:
    name: str
    capability: Capability
    inputs: tuple[Modality, ...]
    outputs: tuple[Modality, ...]
    config: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if not self.name:
            raise PipelineTypeError("stage name must be non-empty")
        if not self.inputs or not self.outputs:
            raise PipelineTypeError(f"stage '{self.name}' needs inputs and outputs")

    @classmethod
    def for_capability(
        cls, name: str, capability: Capability, config: Optional[Mapping] = None
    ) -> "StageSpec":
        inputs, outputs = CAPABILITY_SIGNATURES[capability]
        return cls(name, capability, inputs, outputs, dict(config or {}))


@dataclass(frozen=True)
class SourceRef:
    """Where a stage input comes from: a pipeline input or a prior output."""

    stage: Optional[str]  # None means a pipeline-level input
    index: int

    def describe(self) -> str:
        return f"pipeline.inputs[{self.index}]" if self.stage is None else f"{self.stage}.outputs[{self.index}]"

    def to_json(self) -> str:
        return f"pipeline:{self.index}" if self.stage is None else f"{self.stage}:{self.index}"

    @classmethod
    def from_json(cls, raw: str) -> "SourceRef":
        stage, _, index = raw.rpartition(":")
        if not stage or not index.isdigit():
            raise PipelineTypeError(f"bad source reference {raw!r}")
        return cls(None if stage == "pipeline" else stage, int(index))


@dataclass(frozen=True)
class Binding:
    stage: str
    input: int
    source: SourceRef

    def describe(self) -> str:
        return f"{self.stage}.inputs[{self.input}]"


@dataclass(frozen=True)
class PipelineSpec:
    name: str
    inputs: tuple[Modality, ...]
    stages: tuple[StageSpec, ...]
    bindings: tuple[Binding, ...]

    def stage(self, name: str) -> StageSpec:
        for stage in self.stages:
            if stage.name == name:
                return stage
        raise PipelineTypeError(f"pipeline '{self.name}' has no stage '{name}'")

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "inputs": [m.value for m in self.inputs],
            "stages": [
                {
                    "name": s.name,
                    "capability": s.capability.value,
                    "inputs": [m.value for m in s.inputs],
                    "outputs": [m.value for m in s.outputs],
                    "config": dict(s.config),
                }
                for s in self.stages
            ],
            "bindings": [
                {"stage": b.stage, "input": b.input, "source": b.source.to_json()}
                for b in self.bindings
            ],
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "PipelineSpec":
        try:
            stages = []
            for s in doc["stages"]:
                capability = Capability(s["capability"])
                default_in, default_out = CAPABILITY_SIGNATURES[capability]
                stages.append(
                    StageSpec(
                        name=s["name"],
                        capability=capability,
                        inputs=tuple(Modality(m) for m in s.get("inputs", default_in)),
                        outputs=tuple(Modality(m) for m in s.get("outputs", default_out)),
                        config=dict(s.get("config", {})),
                    )
                )
            bindings = tuple(
                Binding(b["stage"], int(b["input"]), SourceRef.from_json(b["source"]))
                for b in doc["bindings"]
            )
            return cls(
                name=doc["name"],
                inputs=tuple(Modality(m) for m in doc.get("inputs", [])),
                stages=tuple(stages),
                bindings=bindings,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise PipelineTypeError(f"malformed pipeline spec: {exc}") from exc


@dataclass(frozen=True)
class TypedPlan:
    """A validated pipeline: stages in executable order plus its net type."""

    spec: PipelineSpec
    order: tuple[str, ...]
    net_inputs: tuple[Modality, ...]
    net_outputs: tuple[Modality, ...]


def validate_pipeline(spec: PipelineSpec) -> TypedPlan:
    """Accept iff the stage DAG is acyclic and every binding type-checks.

    Raises UnboundInputError, DuplicateBindingError, ModalityMismatchError
    (naming the offending binding), or PipelineCycleError.
    """
    if not spec.stages:
        raise UnboundInputError(f"pipeline '{spec.name}' has no stages")
    names = [s.name for s in spec.stages]
    if len(set(names)) != len(names):
        raise PipelineTypeError(f"pipeline '{spec.name}' has duplicate stage names")
    by_name = {s.name: s for s in spec.stages}

    seen: dict[tuple[str, int], Binding] = {}
    for binding in spec.bindings:
        if binding.stage not in by_name:
            raise PipelineTypeError(
                f"binding {binding.describe()}: unknown stage '{binding.stage}'"
            )
        stage = by_name[binding.stage]
        if not (0 <= binding.input < len(stage.inputs)):
            raise PipelineTypeError(
                f"binding {binding.describe()}: stage has {len(stage.inputs)} inputs"
            )
        key = (binding.stage, binding.input)
        if key in seen:
            raise DuplicateBindingError(f"{binding.describe()} is bound more than once")
        seen[key] = binding

        source = binding.source
        if source.stage is None:
            if not (0 <= source.index < len(spec.inputs)):
                raise PipelineTypeError(
                    f"binding {binding.describe()}: pipeline has {len(spec.inputs)} inputs"
                )
            source_modality = spec.inputs[source.index]
        else:
            if source.stage not in by_name:
                raise PipelineTypeError(
                    f"binding {binding.describe()}: unknown source stage '{source.stage}'"
                )
            producer = by_name[source.stage]
            if not (0 <= source.index < len(producer.outputs)):
                raise PipelineTypeError(
                    f"binding {binding.describe()}: '{source.stage}' has "
                    f"{len(producer.outputs)} outputs"
                )
            source_modality = producer.outputs[source.index]
        dest_modality = stage.inputs[binding.input]
        if not compatible(source_modality, dest_modality):
            raise ModalityMismatchError(
                binding.describe(), dest_modality.value, source_modality.value
            )

    for stage in spec.stages:
        for i in range(len(stage.inputs)):
            if (stage.name, i) not in seen:
                raise UnboundInputError(f"{stage.name}.inputs[{i}] is unbound")

    # Kahn's algorithm; ready stages processed in declaration order
    edges: dict[str, set[str]] = {name: set() for name in names}
    for binding in spec.bindings:
        if binding.source.stage is not None and binding.source.stage != binding.stage:
            edges[binding.stage].add(binding.source.stage)
        elif binding.source.stage == binding.stage:
            raise PipelineCycleError(
                f"binding {binding.describe()} feeds the stage from itself"
            )
    order: list[str] = []
    remaining = dict(edges)
    while remaining:
        ready = [n for n in names if n in remaining and not remaining[n]]
        if not ready:
            cycle = sorted(remaining)
            raise PipelineCycleError(
                f"pipeline '{spec.name}' has a dependency cycle among {cycle}"
            )
        for name in ready:
            order.append(name)
            del remaining[name]
        for deps in remaining.values():
            deps.difference_update(ready)

    consumed = {
        (b.source.stage, b.source.index) for b in spec.bindings if b.source.stage is not None
    }
    net_outputs = tuple(
        modality
        for stage in spec.stages
        for idx, modality in enumerate(stage.outputs)
        if (stage.name, idx) not in consumed
    )
    return TypedPlan(spec=spec, order=tuple(order), net_inputs=spec.inputs, net_outputs=net_outputs)


def registry_tasks(registry: Iterable[StageSpec] | Mapping[str, StageSpec]) -> list[tuple[str, str]]:
    """Every ordered pair (a, b) where an output of a can feed an input of b."""
    stages = list(registry.values()) if isinstance(registry, Mapping) else list(registry)
    pairs = []
    for a in stages:
        for b in stages:
            if a.name == b.name:
                continue
            if any(compatible(out, inp) for out in a.outputs for inp in b.inputs):
                pairs.append((a.name, b.name))
    return pairs


def _linear(name, inputs, stage_list, extra_bindings):
    """Builtin helper: stages whose IMAGE input is pipeline input 0."""
    stages = tuple(StageSpec.for_capability(n, cap) for n, cap in stage_list)
    bindings = [
        Binding(stage.name, 0, SourceRef(None, 0)) for stage in stages
    ]  # every stage sees the image
    bindings.extend(extra_bindings)
    return PipelineSpec(name=name, inputs=inputs, stages=stages, bindings=tuple(bindings))


def builtin_pipelines() -> dict[str, PipelineSpec]:
    image_text = (Modality.IMAGE, Modality.TEXT)
    pipelines = [
        _linear(
            "grounded-sam",
            image_text,
            [("detect", Capability.DETECTOR), ("segment", Capability.SEGMENTER)],
            [
                Binding("detect", 1, SourceRef(None, 1)),
                Binding("segment", 1, SourceRef("detect", 0)),
            ],
        ),
        _linear(
            "auto-annotate",
            (Modality.IMAGE,),
            [
                ("tag", Capability.TAGGER),
                ("detect", Capability.DETECTOR),
                ("segment", Capability.SEGMENTER),
            ],
            [
                Binding("detect", 1, SourceRef("tag", 0)),
                Binding("segment", 1, SourceRef("detect", 0)),
            ],
        ),
        _linear(
            "grounded-inpaint",
            image_text,
            [
                ("detect", Capability.DETECTOR),
                ("segment", Capability.SEGMENTER),
                ("inpaint", Capability.INPAINTER),
            ],
            [
                Binding("detect", 1, SourceRef(None, 1)),
                Binding("segment", 1, SourceRef("detect", 0)),
                Binding("inpaint", 1, SourceRef("segment", 0)),
            ],
        ),
        _linear(
            "promptable-mesh",
            image_text,
            [
                ("detect", Capability.DETECTOR),
                ("segment", Capability.SEGMENTER),
                ("mesh", Capability.MESH_RECOVERER),
            ],
            [
                Binding("detect", 1, SourceRef(None, 1)),
                Binding("segment", 1, SourceRef("detect", 0)),
                Binding("mesh", 1, SourceRef("detect", 0)),
            ],
        ),
    ]
    return {p.name: p for p in pipelines}


def load_pipeline_spec(path: str | Path) -> PipelineSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return PipelineSpec.from_json(json.load(fh))
