from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from zerotta.manifest import DatasetManifest, SampleRecord, save_manifest
from zerotta.zteb import block_offset, write_embedding_file


def _unit_rows(arr: np.ndarray) -> np.ndarray:
    return arr / np.linalg.norm(arr, axis=-1, keepdims=True)


def make_fixture_manifest(root: Path, *, n_samples=12, n_views=8, n_classes=3,
                          dim=16, temperature=0.05, n_templates=2, noise=0.8,
                          seed=7, name="fixture") -> Path:
    """Write a small synthetic dataset (views + text ZTEB + manifest).

    Views scatter around their class prototype with enough noise that some
    predictions are wrong, so accuracy comparisons are informative.
    """
    rng = np.random.default_rng(seed)
    base = _unit_rows(rng.normal(size=(n_classes, dim)))
    templates = [_unit_rows(base + 0.1 * rng.normal(size=base.shape))
                 for _ in range(n_templates)]

    labels = rng.integers(0, n_classes, size=n_samples)
    views = np.empty((n_samples, n_views, dim))
    for s in range(n_samples):
        raw = base[labels[s]][None, :] + noise * rng.normal(size=(n_views, dim))
        views[s] = _unit_rows(raw)

    root.mkdir(parents=True, exist_ok=True)
    write_embedding_file(views, root / "views.zteb")
    text_files = []
    for t, mat in enumerate(templates):
        fname = f"text_{t}.zteb"
        write_embedding_file(mat, root / fname)
        text_files.append(fname)

    samples = tuple(
        SampleRecord(sample_id=f"sample_{s:03d}", label=int(labels[s]),
                     path="views.zteb", offset=block_offset(s, n_views, dim))
        for s in range(n_samples)
    )
    manifest = DatasetManifest(
        dataset=name, n_classes=n_classes,
        class_names=tuple(f"class_{c}" for c in range(n_classes)),
        temperature=temperature, n_views=n_views, samples=samples,
        text_embeddings=tuple(text_files), root=root,
    )
    save_manifest(manifest, root / "manifest.json")
    return root / "manifest.json"


@pytest.fixture
def fixture_manifest(tmp_path) -> Path:
    return make_fixture_manifest(tmp_path / "data")
