"""Capability contracts, the remote wire protocol, and deterministic mocks."""

from .types import (
    BackendEndpoint,
    BackendSet,
    Capability,
    ImagePayload,
    MeshParams,
)
from .client import RemoteBackend
from .mock import MockBackends, MockBehavior

__all__ = [
    "BackendEndpoint",
    "BackendSet",
    "Capability",
    "ImagePayload",
    "MeshParams",
    "MockBackends",
    "MockBehavior",
    "RemoteBackend",
]
