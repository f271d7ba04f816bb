"""Reliability binning, expected calibration error, and rank statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_BINS = 20


@dataclass(frozen=True)
class ReliabilityBins:
    """Equal-width confidence bins over [0, 1].

    ``accuracy`` and ``confidence`` are NaN for empty bins; ``counts`` sums
    to the number of input samples.
    """

    edges: np.ndarray
    counts: np.ndarray
    accuracy: np.ndarray
    confidence: np.ndarray

    @property
    def m_bins(self) -> int:
        return len(self.counts)

    @property
    def occupied(self) -> np.ndarray:
        return self.counts > 0


@dataclass(frozen=True)
class CalibrationReport:
    ece_unweighted: float
    ece_weighted: float
    overconfident_bin_fraction: float
    top1_accuracy: float


def reliability_bins(confidences: np.ndarray, correct: np.ndarray,
                     m_bins: int = DEFAULT_BINS) -> ReliabilityBins:
    """Bin samples by confidence and compute per-bin accuracy and confidence.

    A sample with confidence s lands in bin floor(s * M); exact edges go to
    the higher bin and s = 1 goes to the last bin.
    """
    if m_bins < 1:
        raise ValueError(f"m_bins must be >= 1, got {m_bins}")
    conf = np.asarray(confidences, dtype=np.float64)
    hits = np.asarray(correct, dtype=bool)
    if conf.ndim != 1 or conf.shape != hits.shape:
        raise ValueError("confidences and correct must be 1-D and equally long")
    if conf.size == 0:
        raise ValueError("no samples to bin")
    if np.any(conf < 0.0) or np.any(conf > 1.0):
        raise ValueError("confidences must lie in [0, 1]")

    idx = np.minimum(np.floor(conf * m_bins).astype(np.int64), m_bins - 1)
    counts = np.bincount(idx, minlength=m_bins)
    conf_sums = np.bincount(idx, weights=conf, minlength=m_bins)
    hit_sums = np.bincount(idx, weights=hits.astype(np.float64), minlength=m_bins)
    with np.errstate(invalid="ignore", divide="ignore"):
        accuracy = np.where(counts > 0, hit_sums / counts, np.nan)
        confidence = np.where(counts > 0, conf_sums / counts, np.nan)
    return ReliabilityBins(
        edges=np.linspace(0.0, 1.0, m_bins + 1),
        counts=counts,
        accuracy=accuracy,
        confidence=confidence,
    )


def expected_calibration_error(bins: ReliabilityBins, mode: str = "unweighted") -> float:
    """Average |accuracy - confidence| over bins.

    "unweighted" averages the gaps of occupied bins (empty bins excluded
    from the divisor); "weighted" weights each gap by the bin's share of
    samples.  The two agree whenever all occupied bins hold equal counts.
    """
    occ = bins.occupied
    if not occ.any():
        raise ValueError("no occupied bins")
    gaps = np.abs(bins.accuracy[occ] - bins.confidence[occ])
    if mode == "unweighted":
        return float(gaps.mean())
    if mode == "weighted":
        weights = bins.counts[occ] / bins.counts.sum()
        return float((weights * gaps).sum())
    raise ValueError(f"mode must be 'unweighted' or 'weighted', got {mode!r}")


def calibration_report(confidences: np.ndarray, correct: np.ndarray,
                       m_bins: int = DEFAULT_BINS) -> CalibrationReport:
    """Bin, compute both ECE conventions, and flag overconfident bins."""
    bins = reliability_bins(confidences, correct, m_bins)
    occ = bins.occupied
    over = bins.confidence[occ] > bins.accuracy[occ]
    return CalibrationReport(
        ece_unweighted=expected_calibration_error(bins, "unweighted"),
        ece_weighted=expected_calibration_error(bins, "weighted"),
        overconfident_bin_fraction=float(np.mean(over)),
        top1_accuracy=float(np.asarray(correct, dtype=bool).mean()),
    )


def _fractional_ranks(values: np.ndarray) -> np.ndarray:
    """Ranks starting at 1, ties receiving the average of their positions."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman_rank_correlation(x: np.ndarray, y: np.ndarray) -> float:
    """Pearson correlation of fractional ranks (average ranks for ties)."""
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    if xa.ndim != 1 or xa.shape != ya.shape or xa.size < 2:
        raise ValueError("inputs must be equally long 1-D vectors with >= 2 entries")
    rx = _fractional_ranks(xa)
    ry = _fractional_ranks(ya)
    rx_c = rx - rx.mean()
    ry_c = ry - ry.mean()
    denom = np.sqrt((rx_c ** 2).sum() * (ry_c ** 2).sum())
    if denom == 0.0:
        raise ValueError("rank correlation undefined for a constant input")
    return float((rx_c * ry_c).sum() / denom)


@dataclass(frozen=True)
class ErrorGapRow:
    name: str
    gap: float
    improvement: float


@dataclass(frozen=True)
class ErrorGapReport:
    rows: tuple[ErrorGapRow, ...]
    spearman: float


def error_gap_report(zeroshot_acc, augmented_acc, zero_acc,
                     names: list[str] | None = None) -> ErrorGapReport:
    """Per-dataset accuracy gap vs. adaptation improvement.

    gap = zero-shot accuracy minus accuracy on the augmented counterpart;
    improvement = adapted accuracy minus zero-shot accuracy.  The report
    carries the Spearman correlation between the two columns.
    """
    zs = np.asarray(zeroshot_acc, dtype=np.float64)
    aug = np.asarray(augmented_acc, dtype=np.float64)
    zr = np.asarray(zero_acc, dtype=np.float64)
    if not (zs.shape == aug.shape == zr.shape) or zs.ndim != 1:
        raise ValueError("accuracy columns must be equally long 1-D vectors")
    if names is None:
        names = [str(i) for i in range(zs.size)]
    if len(names) != zs.size:
        raise ValueError("names length does not match accuracy columns")
    gaps = zs - aug
    improvements = zr - zs
    rows = tuple(
        ErrorGapRow(name=n, gap=float(g), improvement=float(i))
        for n, g, i in zip(names, gaps, improvements)
    )
    return ErrorGapReport(rows=rows, spearman=spearman_rank_correlation(gaps, improvements))
