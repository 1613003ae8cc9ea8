"""Exception hierarchy shared across the package.

Every error raised by vispipe derives from VispipeError so callers can
catch the whole family at service/CLI boundaries without swallowing
unrelated bugs.
"""

from __future__ import annotations


class VispipeError(Exception):
    """Base class for all vispipe errors."""


class InvalidBoxError(VispipeError):
    """Box violates its invariants (degenerate or non-finite coordinates)."""


class EmptyClipError(InvalidBoxError):
    """Box lies entirely outside the image it was clipped to."""


class MalformedRLEError(VispipeError):
    """Run-length counts are inconsistent with the declared mask size."""


class DimensionMismatchError(VispipeError):
    """Two masks (or a mask and its image) disagree on height/width."""


class BackendError(VispipeError):
    """Base class for remote-capability failures."""


class BackendUnreachableError(BackendError):
    """Transport failed and the retry budget is exhausted."""


class NonRetryableStatusError(BackendError):
    """Backend answered with a 4xx status; the request will never succeed."""

    def __init__(self, status_code: int, code: str, message: str):
        super().__init__(f"backend returned {status_code} ({code}): {message}")
        self.status_code = status_code
        self.code = code


class ProtocolViolationError(BackendError):
    """Backend response does not honor the wire contract."""


class UnknownSceneError(BackendError):
    """Mock backend was asked about a fixture scene it does not have."""


class TargetNotFoundError(VispipeError):
    """A pipeline found no instance matching the requested phrase(s)."""


class PipelineStageError(VispipeError):
    """A pipeline stage failed; carries the stage name for attribution."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


class PipelineTypeError(VispipeError):
    """Base class for pipeline composition (type-check) failures."""


class ModalityMismatchError(PipelineTypeError):
    """A binding connects ports of incompatible modalities."""

    def __init__(self, binding: str, expected: str, actual: str):
        super().__init__(
            f"binding {binding}: expected {expected}, got {actual}"
        )
        self.binding = binding


class UnboundInputError(PipelineTypeError):
    """A stage input (or the whole pipeline) has nothing feeding it."""


class DuplicateBindingError(PipelineTypeError):
    """A stage input is fed by more than one binding."""


class PipelineCycleError(PipelineTypeError):
    """Stage dependencies form a cycle."""


class StoreError(VispipeError):
    """Annotation store failure (dangling ids, unknown annotations, ...)."""


class EvalInputError(VispipeError):
    """Evaluation inputs violate a precondition (unsorted, crowd, ...)."""
