"""PNG byte handling for the few places that actually touch pixels.

Core pipeline code treats image bytes as opaque; only the mock inpainter,
the CLI edit path, and tests come through here.
"""

from __future__ import annotations

import hashlib
import io

import numpy as np
from PIL import Image

from .errors import VispipeError

__all__ = ["png_encode", "png_decode", "prompt_color"]


def png_encode(pixels: np.ndarray) -> bytes:
    """Encode an HxWx3 uint8 array as PNG; deterministic for equal pixels."""
    arr = np.asarray(pixels, dtype=np.uint8)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise VispipeError(f"expected HxWx3 pixels, got shape {arr.shape}")
    buf = io.BytesIO()
    Image.fromarray(arr, mode="RGB").save(buf, format="PNG", compress_level=6)
    return buf.getvalue()


def png_decode(data: bytes) -> np.ndarray:
    """Decode PNG bytes to an HxWx3 uint8 array."""
    try:
        with Image.open(io.BytesIO(data)) as img:
            return np.asarray(img.convert("RGB"), dtype=np.uint8)
    except Exception as exc:
        raise VispipeError(f"cannot decode PNG bytes: {exc}") from exc


def prompt_color(prompt: str) -> tuple[int, int, int]:
    """Stable fill color for an inpainting prompt."""
    digest = hashlib.sha256(prompt.encode("utf-8")).digest()
    return (digest[3], digest[4], digest[5])
