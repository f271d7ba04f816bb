"""Image/text encoders behind a common two-method surface.

``mock-vlm`` is a deterministic stand-in (fixed random projection of
downsampled pixels; text hashed into a seeded Gaussian) that needs no
weights and keeps exports bit-reproducible, which is what the smoke tests
exercise.  ``hf:<model-or-path>`` loads a real CLIP-style checkpoint through
transformers when that stack is installed and the weights are reachable.
"""

from __future__ import annotations

import hashlib

import numpy as np
from PIL import Image

_MOCK_THUMB = 16
_MOCK_FEATURES = _MOCK_THUMB * _MOCK_THUMB * 3 + 1  # +1 bias keeps norms off zero
_MOCK_SEED = 90210


def _unit_rows(mat: np.ndarray) -> np.ndarray:
    return mat / np.linalg.norm(mat, axis=-1, keepdims=True)


class MockVlmEncoder:
    """Deterministic pixel/text encoder with the footprint of a VLM."""

    def __init__(self, dim: int = 64, resolution: int = 224):
        if dim < 2:
            raise ValueError(f"embedding dim must be >= 2, got {dim}")
        self.dim = dim
        self.resolution = resolution
        rng = np.random.default_rng(_MOCK_SEED)
        self._projection = rng.normal(size=(dim, _MOCK_FEATURES))

    def encode_images(self, images: list[Image.Image]) -> np.ndarray:
        feats = np.empty((len(images), _MOCK_FEATURES))
        for i, image in enumerate(images):
            thumb = image.convert("RGB").resize((_MOCK_THUMB, _MOCK_THUMB), Image.BILINEAR)
            pixels = np.asarray(thumb, dtype=np.float64).ravel() / 255.0 - 0.5
            feats[i] = np.concatenate([pixels, [1.0]])
        return _unit_rows(feats @ self._projection.T)

    def encode_texts(self, texts: list[str]) -> np.ndarray:
        rows = np.empty((len(texts), self.dim))
        for i, text in enumerate(texts):
            digest = hashlib.sha256(text.encode("utf-8")).digest()
            seed = int.from_bytes(digest[:8], "little")
            rows[i] = np.random.default_rng(seed).normal(size=self.dim)
        return _unit_rows(rows)


class HfClipEncoder:
    """CLIP-style checkpoint via transformers; optional heavy path."""

    def __init__(self, name_or_path: str, batch_size: int = 32):
        try:
            import torch
            from transformers import CLIPModel, CLIPProcessor
        except ImportError as exc:
            raise ValueError(
                "loading a real checkpoint needs the optional [clip] extra "
                "(torch + transformers)"
            ) from exc
        try:
            self._model = CLIPModel.from_pretrained(name_or_path).eval()
            self._processor = CLIPProcessor.from_pretrained(name_or_path)
        except Exception as exc:
            raise ValueError(f"cannot load model {name_or_path!r}: {exc}") from exc
        self._torch = torch
        self._batch = batch_size
        size = self._processor.image_processor.crop_size
        self.resolution = size["height"] if isinstance(size, dict) else int(size)
        self.dim = self._model.config.projection_dim

    def encode_images(self, images):
        chunks = []
        with self._torch.no_grad():
            for i in range(0, len(images), self._batch):
                inputs = self._processor(images=images[i:i + self._batch],
                                         return_tensors="pt")
                feats = self._model.get_image_features(**inputs)
                chunks.append(feats.double().cpu().numpy())
        return _unit_rows(np.concatenate(chunks, axis=0))

    def encode_texts(self, texts):
        with self._torch.no_grad():
            inputs = self._processor(text=list(texts), return_tensors="pt", padding=True)
            feats = self._model.get_text_features(**inputs)
        return _unit_rows(feats.double().cpu().numpy())


def load_encoder(model_id: str, batch_size: int = 32):
    """Resolve a model identifier to an encoder instance.

    ``mock-vlm`` or ``mock-vlm:<dim>`` for the deterministic stand-in,
    ``hf:<model-or-path>`` for a transformers CLIP checkpoint.
    """
    if model_id == "mock-vlm":
        return MockVlmEncoder()
    if model_id.startswith("mock-vlm:"):
        return MockVlmEncoder(dim=int(model_id.split(":", 1)[1]))
    if model_id.startswith("hf:"):
        return HfClipEncoder(model_id.split(":", 1)[1], batch_size=batch_size)
    raise ValueError(f"unknown model identifier {model_id!r}; "
                     "expected 'mock-vlm[:dim]' or 'hf:<model-or-path>'")
