"""The export job: images -> view embeddings + class-text embeddings + manifest.

Datasets follow the image-folder convention (one subdirectory per class).
Each image yields an (n_views, D) block: view 0 is the plain preprocessed
source, views 1..N-1 are random resized crops with random horizontal flips.
All randomness derives from (seed, sample index, view index), so a re-export
with the same seed is bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from . import __version__
from .augment import CROP_SCALE, FLIP_PROBABILITY, augment_view, preprocess
from .encoders import load_encoder
from .format import view_block_offset, write_manifest, write_zteb

DEFAULT_TEMPLATE = "a photo of a {}."

# The generic templates commonly used for prompt ensembling with CLIP-style
# encoders; class names are substituted for the placeholder.
TEMPLATE_SET_7 = (
    "itap of a {}.",
    "a bad photo of the {}.",
    "a origami {}.",
    "a photo of the large {}.",
    "a {} in a video game.",
    "art of the {}.",
    "a photo of the small {}.",
)

IMAGE_EXTENSIONS = {".jpg", ".jpeg", ".png", ".bmp", ".webp"}


@dataclass(frozen=True)
class ExportJob:
    dataset_dir: Path
    output_dir: Path
    model: str = "mock-vlm"
    templates: tuple[str, ...] = (DEFAULT_TEMPLATE,)
    n_views: int = 64
    seed: int = 0
    temperature: float = 0.01
    batch_size: int = 32
    resolution: int | None = None  # None: use the encoder's native size

    def __post_init__(self):
        if self.n_views < 1:
            raise ValueError(f"n_views must be >= 1, got {self.n_views}")
        if not self.templates:
            raise ValueError("at least one template is required")
        for t in self.templates:
            if "{}" not in t:
                raise ValueError(f"template {t!r} has no class-name placeholder")
        if not self.temperature > 0:
            raise ValueError(f"temperature must be positive, got {self.temperature}")


def scan_dataset(dataset_dir: Path):
    """Class names from subdirectory names; images sorted for determinism."""
    dataset_dir = Path(dataset_dir)
    if not dataset_dir.is_dir():
        raise ValueError(f"dataset directory not found: {dataset_dir}")
    class_dirs = sorted(p for p in dataset_dir.iterdir() if p.is_dir())
    if not class_dirs:
        raise ValueError(f"no class subdirectories under {dataset_dir}")
    class_names = [p.name for p in class_dirs]
    samples = []
    for label, class_dir in enumerate(class_dirs):
        images = sorted(p for p in class_dir.iterdir()
                        if p.suffix.lower() in IMAGE_EXTENSIONS)
        for path in images:
            samples.append((path.relative_to(dataset_dir).as_posix(), label))
    if not samples:
        raise ValueError(f"no images found under {dataset_dir}")
    return class_names, samples


def run_export(job: ExportJob) -> Path:
    """Run the job; returns the path of the written manifest."""
    encoder = load_encoder(job.model, batch_size=job.batch_size)
    resolution = job.resolution or encoder.resolution
    class_names, samples = scan_dataset(job.dataset_dir)

    out = Path(job.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    text_files = []
    dim = None
    for t, template in enumerate(job.templates):
        prompts = [template.format(name) for name in class_names]
        embeddings = encoder.encode_texts(prompts)
        dim = embeddings.shape[1]
        fname = f"text_{t}.zteb"
        write_zteb(embeddings, out / fname)
        text_files.append(fname)

    views = np.empty((len(samples), job.n_views, dim))
    for s, (rel_path, _) in enumerate(samples):
        with Image.open(Path(job.dataset_dir) / rel_path) as image:
            image.load()
            batch = [preprocess(image, resolution)]
            for v in range(1, job.n_views):
                rng = np.random.default_rng([job.seed, s, v])
                batch.append(augment_view(image, rng, resolution))
        views[s] = encoder.encode_images(batch)
    write_zteb(views, out / "views.zteb")

    records = [
        {"sample_id": rel_path, "label": label, "path": "views.zteb",
         "offset": view_block_offset(s, job.n_views, dim)}
        for s, (rel_path, label) in enumerate(samples)
    ]
    manifest_path = out / "manifest.json"
    write_manifest(
        manifest_path,
        dataset=Path(job.dataset_dir).name,
        class_names=class_names,
        temperature=job.temperature,
        n_views=job.n_views,
        samples=records,
        text_files=text_files,
        provenance={
            "exporter": f"zteb-exporter {__version__}",
            "model": job.model,
            "resolution": resolution,
            "seed": job.seed,
            "crop_scale": list(CROP_SCALE),
            "flip_probability": FLIP_PROBABILITY,
            "templates": list(job.templates),
        },
    )
    return manifest_path
