#!/usr/bin/env python3
"""Rebuild the shipped pristine NIQE model from scikit-image's sample photos.

The shipped model only has to be internally consistent for this package; any
clean photo set works. Run from the repository root:

    python tools/fit_default_niqe_model.py
"""

import sys
from pathlib import Path

import numpy as np
import skimage.data

from stackiqa.metrics import fit_pristine_model
from stackiqa.pairset import image_from_array

CORPUS_NAMES = [
    "camera",
    "astronaut",
    "coffee",
    "chelsea",
    "coins",
    "rocket",
    "hubble_deep_field",
    "immunohistochemistry",
    "brick",
    "grass",
    "gravel",
    "cat",
]

OUT = Path(__file__).resolve().parent.parent / "src" / "stackiqa" / "data" / "niqe_model_default.txt"


def main() -> int:
    corpus = []
    for name in CORPUS_NAMES:
        arr = getattr(skimage.data, name)()
        corpus.append(image_from_array(np.asarray(arr, dtype=np.uint8)))
        print(f"loaded {name}: {arr.shape}")
    model = fit_pristine_model(corpus, patch_size=96, sharpness_fraction=0.75)
    model.save(OUT)
    print(f"wrote {OUT}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
