#!/usr/bin/env python3
"""Regenerate the shared RLE conformance vectors.

The review frontend decodes masks client-side; this file is the contract
both codecs are tested against. Deterministic: rerunning produces the
same bytes.
"""

import json
from pathlib import Path

import numpy as np

from vispipe.rlemask import encode_bitmap

OUT = Path(__file__).resolve().parents[1] / "conformance" / "rle_vectors.json"


def case(bits: np.ndarray) -> dict:
    mask = encode_bitmap(bits)
    rows, cols = np.nonzero(bits)
    return {
        "size": [mask.height, mask.width],
        "counts": list(mask.counts),
        "pixels": [[int(r), int(c)] for r, c in zip(rows, cols)],
    }


def main() -> None:
    rng = np.random.default_rng(424242)
    cases = []

    empty = np.zeros((2, 2), dtype=bool)
    cases.append(case(empty))

    cases.append(case(np.ones((2, 2), dtype=bool)))

    corner = np.zeros((2, 2), dtype=bool)
    corner[0, 0] = True
    cases.append(case(corner))

    tall = np.zeros((7, 3), dtype=bool)
    tall[:, 1] = True
    cases.append(case(tall))

    wide = np.zeros((3, 9), dtype=bool)
    wide[1, :] = True
    cases.append(case(wide))

    checker = np.indices((6, 6)).sum(axis=0) % 2 == 0
    cases.append(case(checker))

    for h, w in [(5, 5), (13, 9), (16, 16), (31, 17), (64, 64)]:
        cases.append(case(rng.random((h, w)) < rng.random()))

    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps({"cases": cases}, indent=1), encoding="utf-8")
    print(f"wrote {len(cases)} cases to {OUT}")


if __name__ == "__main__":
    main()
