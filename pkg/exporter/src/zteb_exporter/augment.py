"""Deterministic image preprocessing and augmentation.

The augmentation pool is random resized crops plus random horizontal flips;
every random quantity comes from a generator the caller seeds, so a given
(seed, sample, view) triple always yields the same pixels.
"""

from __future__ import annotations

import math

import numpy as np
from PIL import Image

CROP_SCALE = (0.08, 1.0)
CROP_RATIO = (3.0 / 4.0, 4.0 / 3.0)
FLIP_PROBABILITY = 0.5


def preprocess(image: Image.Image, resolution: int) -> Image.Image:
    """Source-view preprocessing: resize the short side, then center crop."""
    image = image.convert("RGB")
    w, h = image.size
    scale = resolution / min(w, h)
    image = image.resize((max(resolution, round(w * scale)),
                          max(resolution, round(h * scale))), Image.BICUBIC)
    w, h = image.size
    left = (w - resolution) // 2
    top = (h - resolution) // 2
    return image.crop((left, top, left + resolution, top + resolution))


def _sample_crop(rng: np.random.Generator, width: int, height: int):
    """Crop box for a random resized crop; ten attempts then a clipped
    center-crop fallback, mirroring the usual training-pipeline behavior."""
    area = width * height
    log_ratio = (math.log(CROP_RATIO[0]), math.log(CROP_RATIO[1]))
    for _ in range(10):
        target = area * rng.uniform(*CROP_SCALE)
        ratio = math.exp(rng.uniform(*log_ratio))
        w = round(math.sqrt(target * ratio))
        h = round(math.sqrt(target / ratio))
        if 0 < w <= width and 0 < h <= height:
            left = int(rng.integers(0, width - w + 1))
            top = int(rng.integers(0, height - h + 1))
            return left, top, w, h
    in_ratio = width / height
    if in_ratio < CROP_RATIO[0]:
        w = width
        h = round(w / CROP_RATIO[0])
    elif in_ratio > CROP_RATIO[1]:
        h = height
        w = round(h * CROP_RATIO[1])
    else:
        w, h = width, height
    return (width - w) // 2, (height - h) // 2, w, h


def augment_view(image: Image.Image, rng: np.random.Generator,
                 resolution: int) -> Image.Image:
    """One augmented view: random resized crop, then maybe a horizontal flip."""
    image = image.convert("RGB")
    left, top, w, h = _sample_crop(rng, *image.size)
    view = image.crop((left, top, left + w, top + h))
    view = view.resize((resolution, resolution), Image.BICUBIC)
    if rng.random() < FLIP_PROBABILITY:
        view = view.transpose(Image.FLIP_LEFT_RIGHT)
    return view
