"""Dataset manifests: which samples exist, where their embeddings live.

A manifest is a JSON document next to the ZTEB files it references::

    {
      "dataset": "birds-mini",
      "n_classes": 3,
      "class_names": ["crow", "gull", "wren"],
      "temperature": 0.01,
      "n_views": 64,
      "samples": [
        {"sample_id": "crow/001.jpg", "label": 0,
         "path": "views.zteb", "offset": 32}
      ],
      "text_embeddings": ["text_0.zteb"]
    }

``path``/``text_embeddings`` entries are resolved relative to the manifest's
directory.  Each sample's record points at its (n_views, D) view block; view
0 is always the un-augmented source image.  Unknown top-level keys are
preserved in ``extra`` so exporters can attach provenance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

REQUIRED_KEYS = ("dataset", "n_classes", "class_names", "temperature",
                 "n_views", "samples", "text_embeddings")
SAMPLE_KEYS = ("sample_id", "label", "path", "offset")


class ManifestError(ValueError):
    """A manifest document is malformed or internally inconsistent."""


@dataclass(frozen=True)
class SampleRecord:
    sample_id: str
    label: int
    path: str
    offset: int


@dataclass(frozen=True)
class DatasetManifest:
    dataset: str
    n_classes: int
    class_names: tuple[str, ...]
    temperature: float
    n_views: int
    samples: tuple[SampleRecord, ...]
    text_embeddings: tuple[str, ...]
    root: Path = Path(".")
    extra: dict = field(default_factory=dict)

    def resolve(self, relative: str) -> Path:
        return self.root / relative


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ManifestError(message)


def load_manifest(path) -> DatasetManifest:
    """Load and validate a manifest file."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: not valid JSON: {exc}") from exc
    _require(isinstance(doc, dict), f"{path}: manifest must be a JSON object")
    for key in REQUIRED_KEYS:
        _require(key in doc, f"{path}: missing required field {key!r}")

    n_classes = doc["n_classes"]
    class_names = doc["class_names"]
    temperature = doc["temperature"]
    n_views = doc["n_views"]
    _require(isinstance(n_classes, int) and n_classes >= 1,
             f"{path}: n_classes must be a positive integer")
    _require(isinstance(class_names, list) and len(class_names) == n_classes,
             f"{path}: class_names must list exactly n_classes names")
    _require(isinstance(temperature, (int, float)) and temperature > 0,
             f"{path}: temperature must be positive")
    _require(isinstance(n_views, int) and n_views >= 1,
             f"{path}: n_views must be a positive integer")
    _require(isinstance(doc["samples"], list) and doc["samples"],
             f"{path}: samples must be a non-empty list")
    _require(isinstance(doc["text_embeddings"], list) and doc["text_embeddings"],
             f"{path}: text_embeddings must be a non-empty list")

    samples = []
    seen_ids = set()
    for i, rec in enumerate(doc["samples"]):
        _require(isinstance(rec, dict), f"{path}: samples[{i}] must be an object")
        for key in SAMPLE_KEYS:
            _require(key in rec, f"{path}: samples[{i}] missing field {key!r}")
        label = rec["label"]
        _require(isinstance(label, int) and 0 <= label < n_classes,
                 f"{path}: samples[{i}] label {label!r} outside [0, {n_classes})")
        offset = rec["offset"]
        _require(isinstance(offset, int) and offset >= 0,
                 f"{path}: samples[{i}] offset must be a nonnegative integer")
        sid = rec["sample_id"]
        _require(isinstance(sid, str) and sid, f"{path}: samples[{i}] sample_id must be a string")
        _require(sid not in seen_ids, f"{path}: duplicate sample_id {sid!r}")
        seen_ids.add(sid)
        samples.append(SampleRecord(sample_id=sid, label=label,
                                    path=str(rec["path"]), offset=offset))

    extra = {k: v for k, v in doc.items() if k not in REQUIRED_KEYS}
    return DatasetManifest(
        dataset=str(doc["dataset"]),
        n_classes=n_classes,
        class_names=tuple(str(n) for n in class_names),
        temperature=float(temperature),
        n_views=n_views,
        samples=tuple(samples),
        text_embeddings=tuple(str(p) for p in doc["text_embeddings"]),
        root=path.parent,
        extra=extra,
    )


def save_manifest(manifest: DatasetManifest, path) -> None:
    """Write a manifest document (used mainly by tests and fixtures)."""
    doc = dict(manifest.extra)
    doc.update({
        "dataset": manifest.dataset,
        "n_classes": manifest.n_classes,
        "class_names": list(manifest.class_names),
        "temperature": manifest.temperature,
        "n_views": manifest.n_views,
        "samples": [
            {"sample_id": s.sample_id, "label": s.label, "path": s.path, "offset": s.offset}
            for s in manifest.samples
        ],
        "text_embeddings": list(manifest.text_embeddings),
    })
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
