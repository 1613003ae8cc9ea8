"""Service configuration: listen address, backend endpoints, directories."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional

from ..backends.types import BackendEndpoint, Capability
from ..errors import VispipeError
from ..pipeline.grounded import GroundedSamConfig

__all__ = ["ServiceConfig", "ENV_LISTEN", "ENV_DATA_DIR"]

ENV_LISTEN = "VISPIPE_LISTEN"
ENV_DATA_DIR = "VISPIPE_DATA_DIR"

# every built-in pipeline must be runnable, so all six capabilities need homes
REQUIRED_CAPABILITIES = tuple(Capability)


@dataclass
class ServiceConfig:
    backends: dict[Capability, BackendEndpoint]
    data_dir: Path
    listen: str = "127.0.0.1:8080"
    workers: int = os.cpu_count() or 1
    fixture_dir: Optional[Path] = None
    defaults: GroundedSamConfig = field(default_factory=GroundedSamConfig)

    def __post_init__(self):
        if self.workers < 1:
            raise VispipeError(f"workers must be >= 1, got {self.workers}")
        for capability in REQUIRED_CAPABILITIES:
            if capability not in self.backends:
                raise VispipeError(
                    f"no endpoint configured for capability '{capability.value}'"
                )

    @property
    def host(self) -> str:
        return self.listen.rsplit(":", 1)[0]

    @property
    def port(self) -> int:
        try:
            return int(self.listen.rsplit(":", 1)[1])
        except (IndexError, ValueError):
            raise VispipeError(f"listen address needs host:port, got {self.listen!r}")

    @classmethod
    def from_json(cls, doc: Mapping, *, base_dir: Path = Path(".")) -> "ServiceConfig":
        raw_backends = dict(doc.get("backends", {}))
        default = raw_backends.pop("default", None)
        backends: dict[Capability, BackendEndpoint] = {}
        for capability in Capability:
            raw = raw_backends.pop(capability.value, default)
            if raw is None:
                continue
            backends[capability] = BackendEndpoint(
                capability=capability,
                base_url=raw["base_url"],
                timeout_ms=int(raw.get("timeout_ms", 5000)),
                max_retries=int(raw.get("max_retries", 2)),
                backoff_base_ms=int(raw.get("backoff_base_ms", 50)),
            )
        if raw_backends:
            raise VispipeError(f"unknown backend keys: {sorted(raw_backends)}")

        listen = os.environ.get(ENV_LISTEN) or doc.get("listen", "127.0.0.1:8080")
        data_dir = os.environ.get(ENV_DATA_DIR) or doc.get("data_dir")
        if not data_dir:
            raise VispipeError("config needs data_dir (or VISPIPE_DATA_DIR)")
        fixture_dir = doc.get("fixture_dir")
        return cls(
            backends=backends,
            data_dir=_resolve(base_dir, data_dir),
            listen=listen,
            workers=int(doc.get("workers", os.cpu_count() or 1)),
            fixture_dir=_resolve(base_dir, fixture_dir) if fixture_dir else None,
            defaults=GroundedSamConfig.from_json(doc.get("defaults", {})),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "ServiceConfig":
        path = Path(path)
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(json.load(fh), base_dir=path.parent)


def _resolve(base: Path, value: str | Path) -> Path:
    path = Path(value)
    return path if path.is_absolute() else base / path
