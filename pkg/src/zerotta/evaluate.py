"""Dataset-level evaluation: plain zero-shot vs. zero-temperature voting."""

from __future__ import annotations

import dataclasses
import enum
import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .core import cosine_logits, ensemble_text_embeddings
from .manifest import DatasetManifest
from .zero import ZeroConfig, ZeroResult, keep_count, zero_predict
from .zteb import read_block, read_embedding_file


class Method(enum.Enum):
    ZERO_SHOT = "zero-shot"
    ZERO = "zero"
    ZERO_ENSEMBLE = "zero-ensemble"

    @classmethod
    def from_name(cls, name: str) -> "Method":
        for member in cls:
            if member.value == name:
                return member
        names = ", ".join(m.value for m in cls)
        raise ValueError(f"unknown method {name!r}; expected one of: {names}")


@dataclass(frozen=True)
class ZeroShotResult:
    predicted_class: int
    tie_occurred: bool


def zeroshot_predict(source_emb: np.ndarray, text_embs: np.ndarray) -> ZeroShotResult:
    """Argmax cosine similarity of the source view; exact ties take the lowest index."""
    sims = cosine_logits(np.atleast_2d(source_emb), text_embs)[0]
    top = sims.max()
    winners = np.flatnonzero(sims == top)
    return ZeroShotResult(predicted_class=int(winners[0]), tie_occurred=winners.size > 1)


@dataclass(frozen=True)
class MethodSummary:
    top1_accuracy: float
    correct: int
    total: int
    ties: int
    tie_fallbacks: int  # final-vote ties the greedy scan could not resolve


@dataclass(frozen=True)
class EvaluationReport:
    dataset: str
    n_classes: int
    n_views: int
    n_samples: int
    views_kept: int
    config: dict
    methods: dict
    samples: list

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["methods"] = {k: dataclasses.asdict(v) for k, v in self.methods.items()}
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def sample_seed(master_seed: int, sample_id: str) -> int:
    """Stable per-sample seed: independent of record order in the manifest."""
    digest = hashlib.sha256(sample_id.encode("utf-8")).digest()
    mixed = np.random.SeedSequence([master_seed, int.from_bytes(digest[:8], "little")])
    return int(mixed.generate_state(1, np.uint64)[0])


def evaluate_dataset(manifest: DatasetManifest, methods, cfg: ZeroConfig,
                     tau_override: float | None = None) -> EvaluationReport:
    """Run the selected methods over every sample in the manifest.

    The manifest's temperature drives confidence filtering unless
    ``tau_override`` is given.  Per-sample results are keyed and sorted by
    sample id, so the report does not depend on record order.
    """
    methods = {m if isinstance(m, Method) else Method.from_name(m) for m in methods}
    if not methods:
        raise ValueError("no methods selected")

    tau = float(tau_override) if tau_override is not None else manifest.temperature
    cfg = dataclasses.replace(cfg, tau=tau)

    template_embs = [read_embedding_file(manifest.resolve(p))
                     for p in manifest.text_embeddings]
    for i, emb in enumerate(template_embs):
        if emb.ndim != 2 or emb.shape[0] != manifest.n_classes:
            raise ValueError(
                f"text embedding file {manifest.text_embeddings[i]!r} has shape "
                f"{emb.shape}, expected ({manifest.n_classes}, D)"
            )
    if Method.ZERO_ENSEMBLE in methods and len(template_embs) < 2:
        raise ValueError("zero-ensemble needs at least two template embedding files")
    base_text = template_embs[0]
    ensemble_text = (ensemble_text_embeddings(template_embs)
                     if Method.ZERO_ENSEMBLE in methods else None)
    dim = base_text.shape[1]

    per_sample = []
    tallies = {m: {"correct": 0, "ties": 0, "fallbacks": 0} for m in methods}
    for record in manifest.samples:
        block = read_block(manifest.resolve(record.path), record.offset,
                           manifest.n_views, dim)
        row = {"sample_id": record.sample_id, "label": record.label}
        scfg = dataclasses.replace(cfg, seed=sample_seed(cfg.seed, record.sample_id))

        if Method.ZERO_SHOT in methods:
            res = zeroshot_predict(block[0], base_text)
            row[Method.ZERO_SHOT.value] = res.predicted_class
            _tally(tallies[Method.ZERO_SHOT], res.predicted_class, record.label,
                   res.tie_occurred, False)
        if Method.ZERO in methods:
            res = zero_predict(block, base_text, scfg)
            row[Method.ZERO.value] = res.predicted_class
            _tally(tallies[Method.ZERO], res.predicted_class, record.label,
                   res.tie_occurred, _fell_back(res, scfg))
        if Method.ZERO_ENSEMBLE in methods:
            res = zero_predict(block, ensemble_text, scfg)
            row[Method.ZERO_ENSEMBLE.value] = res.predicted_class
            _tally(tallies[Method.ZERO_ENSEMBLE], res.predicted_class, record.label,
                   res.tie_occurred, _fell_back(res, scfg))
        per_sample.append(row)

    total = len(manifest.samples)
    summaries = {
        m.value: MethodSummary(
            top1_accuracy=t["correct"] / total,
            correct=t["correct"],
            total=total,
            ties=t["ties"],
            tie_fallbacks=t["fallbacks"],
        )
        for m, t in tallies.items()
    }
    return EvaluationReport(
        dataset=manifest.dataset,
        n_classes=manifest.n_classes,
        n_views=manifest.n_views,
        n_samples=total,
        views_kept=keep_count(cfg.gamma, manifest.n_views),
        config={
            "gamma": cfg.gamma,
            "tau": cfg.tau,
            "tie_break": cfg.tie_break.value,
            "seed": cfg.seed,
            "limit_mode": cfg.limit_mode,
            "methods": sorted(m.value for m in methods),
        },
        methods=summaries,
        samples=sorted(per_sample, key=lambda r: r["sample_id"]),
    )


def _fell_back(res: ZeroResult, cfg: ZeroConfig) -> bool:
    """True when the configured strategy could not resolve a tie by itself."""
    return bool(res.tie_occurred and res.tie_breaker_used != cfg.tie_break.value)


def _tally(t: dict, predicted: int, label: int, tie: bool, fallback: bool) -> None:
    if predicted == label:
        t["correct"] += 1
    if tie:
        t["ties"] += 1
    if fallback:
        t["fallbacks"] += 1
