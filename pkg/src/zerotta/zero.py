"""Zero-temperature prediction over augmented views.

The procedure: predict per view, keep the most confident views by entropy
percentile, collapse each kept row to its zero-temperature limit, sum, and
take the argmax.  With no exact logit ties this equals majority voting over
the kept views; exact vote ties are resolved by a configurable strategy.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import (
    cosine_logits,
    entropy,
    softmax_temperature,
    validate_probability_rows,
    zero_temperature_eps,
    zero_temperature_limit,
)


class TieBreak(enum.Enum):
    """Strategies for resolving exact ties in the final vote totals."""

    GREEDY = "greedy"
    MOST_CONFIDENT_PROB = "most-confident"
    PER_CLASS_MARGINAL_ENTROPY = "per-class-entropy"
    MAX_LOGIT = "max-logit"
    MEAN_LOGIT = "mean-logit"
    MAX_LOGIT_PER_VIEW = "max-logit-per-view"
    RANDOM = "random"

    @classmethod
    def from_name(cls, name: str) -> "TieBreak":
        for member in cls:
            if member.value == name:
                return member
        names = ", ".join(m.value for m in cls)
        raise ValueError(f"unknown tie-break strategy {name!r}; expected one of: {names}")


@dataclass(frozen=True)
class FilterConfig:
    """Confidence-filter settings: keep the bottom-gamma entropy percentile.

    ``tau`` records the temperature at which the pre-filter probabilities
    were computed; entropy ranking depends on it, so it travels with gamma.
    """

    gamma: float
    tau: float = 0.01

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")
        if not self.tau > 0.0:
            raise ValueError(f"tau must be positive, got {self.tau}")


@dataclass(frozen=True)
class FilterMask:
    """Result of confidence filtering.

    Attributes:
        kept: boolean vector over the N views.
        order: indices of kept views, ascending by entropy (ties by index).
    """

    kept: np.ndarray
    order: np.ndarray

    @property
    def n_kept(self) -> int:
        return int(self.kept.sum())


@dataclass(frozen=True)
class ZeroConfig:
    """Settings for :func:`zero_predict`."""

    tau: float = 0.01
    gamma: float = 0.3
    tie_break: TieBreak = TieBreak.GREEDY
    seed: int = 0
    limit_mode: str = "analytic"  # "analytic" | "eps"

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")
        if not self.tau > 0.0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.limit_mode not in ("analytic", "eps"):
            raise ValueError(f"limit_mode must be 'analytic' or 'eps', got {self.limit_mode!r}")


@dataclass(frozen=True)
class ZeroResult:
    """Prediction plus diagnostics for a single sample.

    ``marginal`` is the zero-temperature marginal over kept views (the
    normalized sum of the per-view limit rows).  ``vote_counts`` counts kept
    views with a unique argmax per class; rows with exact within-row logit
    ties contribute fractional mass to ``marginal`` only.
    ``tie_breaker_used`` names the strategy that actually resolved a final
    vote tie (the greedy scan can fall through to the most-confident rule),
    or is None when no tie occurred.
    """

    predicted_class: int
    vote_counts: np.ndarray
    tie_occurred: bool
    tie_breaker_used: str | None
    filter_mask: FilterMask
    marginal: np.ndarray


def keep_count(gamma: float, n_views: int) -> int:
    """Number of views retained: max(1, floor(gamma * N)).

    The small bias guards against products like 0.29 * 100 rounding to
    28.999... and flooring one short of the exact value.
    """
    if n_views < 1:
        raise ValueError("n_views must be >= 1")
    return max(1, int(math.floor(gamma * n_views + 1e-9)))


def confidence_filter(probs: np.ndarray, cfg: FilterConfig) -> FilterMask:
    """Keep the lowest-entropy rows; boundary ties break by ascending index."""
    arr = validate_probability_rows(probs, "probs")
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValueError(f"probs must be a non-empty 2-D matrix, got shape {arr.shape}")
    n = arr.shape[0]
    k = keep_count(cfg.gamma, n)
    row_entropy = entropy(arr)
    order = np.argsort(row_entropy, kind="stable")[:k]
    kept = np.zeros(n, dtype=bool)
    kept[order] = True
    return FilterMask(kept=kept, order=order.astype(np.int64))


def vote_counts(logits: np.ndarray, mask: FilterMask) -> np.ndarray:
    """Count kept rows whose unique argmax falls on each class.

    Rows with an exact logit tie at the top cast no integer vote here; their
    fractional 1/m mass appears only in the zero-temperature marginal.
    """
    arr = np.asarray(logits, dtype=np.float64)
    n, c = arr.shape
    counts = np.zeros(c, dtype=np.int64)
    for i in mask.order:
        row = arr[i]
        top = row.max()
        winners = np.flatnonzero(row == top)
        if winners.size == 1:
            counts[winners[0]] += 1
    return counts


def _row_argmax_unique(row: np.ndarray) -> int | None:
    top = row.max()
    winners = np.flatnonzero(row == top)
    return int(winners[0]) if winners.size == 1 else None


def _break_tie(logits, probs, mask, tied, strategy, seed):
    """Resolve a final-vote tie; returns (class, name of the rule that fired)."""
    tied = np.asarray(sorted(int(t) for t in tied), dtype=np.int64)
    if tied.size < 2:
        raise ValueError("tie set must contain at least two classes")
    tied_set = set(tied.tolist())
    kept_idx = mask.order

    if strategy is TieBreak.GREEDY:
        # Scan the views that were filtered out, most confident first, until
        # one of them predicts a tied class.
        rest = np.flatnonzero(~mask.kept)
        if rest.size:
            rest_entropy = entropy(probs[rest])
            for i in rest[np.argsort(rest_entropy, kind="stable")]:
                pred = _row_argmax_unique(logits[i])
                if pred is not None and pred in tied_set:
                    return pred, TieBreak.GREEDY.value
        return _break_tie(logits, probs, mask, tied, TieBreak.MOST_CONFIDENT_PROB, seed)

    if strategy in (TieBreak.MOST_CONFIDENT_PROB, TieBreak.MAX_LOGIT_PER_VIEW):
        scores = probs if strategy is TieBreak.MOST_CONFIDENT_PROB else logits
        best_class, best_score = None, -np.inf
        for i in kept_idx:
            pred = _row_argmax_unique(logits[i])
            if pred is None or pred not in tied_set:
                continue
            score = scores[i].max()
            if score > best_score:
                best_class, best_score = pred, score
        if best_class is not None:
            return best_class, strategy.value
        # No kept view has a unique tied argmax (fractional-vote ties only):
        # fall back to the largest single score assigned to any tied class.
        per_class = scores[kept_idx][:, tied].max(axis=0)
        return int(tied[int(np.argmax(per_class))]), strategy.value

    if strategy is TieBreak.PER_CLASS_MARGINAL_ENTROPY:
        best_class, best_entropy = int(tied[0]), np.inf
        for c in tied:
            supporters = [i for i in kept_idx if _row_argmax_unique(logits[i]) == int(c)]
            if not supporters:
                continue
            h = float(entropy(probs[supporters].mean(axis=0)))
            if h < best_entropy:
                best_class, best_entropy = int(c), h
        return best_class, strategy.value

    if strategy is TieBreak.MAX_LOGIT:
        per_class = logits[kept_idx][:, tied].max(axis=0)
        return int(tied[int(np.argmax(per_class))]), strategy.value

    if strategy is TieBreak.MEAN_LOGIT:
        per_class = logits[kept_idx][:, tied].mean(axis=0)
        return int(tied[int(np.argmax(per_class))]), strategy.value

    if strategy is TieBreak.RANDOM:
        rng = np.random.default_rng(seed)
        return int(rng.choice(tied)), strategy.value

    raise ValueError(f"unhandled tie-break strategy {strategy!r}")


def break_tie(logits: np.ndarray, probs: np.ndarray, mask: FilterMask,
              tied, strategy: TieBreak, seed: int = 0) -> int:
    """Pick one class from a tied set according to ``strategy``.

    Greedy scans the non-kept views in ascending entropy order and falls
    through to the most-confident rule when no remaining view predicts a
    tied class.  Random is deterministic given ``seed``.
    """
    winner, _ = _break_tie(np.asarray(logits, dtype=np.float64),
                           np.asarray(probs, dtype=np.float64),
                           mask, tied, strategy, seed)
    return winner


def zero_predict(image_embs: np.ndarray, text_embs: np.ndarray,
                 cfg: ZeroConfig = ZeroConfig()) -> ZeroResult:
    """Full prediction pipeline for one sample.

    Computes cosine logits, filters views by pre-filter entropy at
    ``cfg.tau``, collapses kept rows to the zero-temperature limit
    (analytically, or through the machine-epsilon softmax in eps mode),
    sums, and returns the argmax with tie diagnostics.
    """
    logits = cosine_logits(image_embs, text_embs)
    return zero_predict_from_logits(logits, cfg)


def zero_predict_from_logits(logits: np.ndarray, cfg: ZeroConfig = ZeroConfig()) -> ZeroResult:
    """Same as :func:`zero_predict` but starting from a precomputed logit matrix."""
    arr = np.asarray(logits, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValueError(f"logits must be a non-empty 2-D matrix, got shape {arr.shape}")
    probs = softmax_temperature(arr, cfg.tau)
    mask = confidence_filter(probs, FilterConfig(gamma=cfg.gamma, tau=cfg.tau))

    limit = zero_temperature_limit if cfg.limit_mode == "analytic" else zero_temperature_eps
    rows = limit(arr[mask.order])
    total = rows.sum(axis=0)
    counts = vote_counts(arr, mask)

    top = total.max()
    tied = np.flatnonzero(total == top)
    if tied.size > 1:
        predicted, used = _break_tie(arr, probs, mask, tied, cfg.tie_break, cfg.seed)
        tie_occurred, tie_breaker_used = True, used
    else:
        predicted = int(tied[0])
        tie_occurred, tie_breaker_used = False, None

    return ZeroResult(
        predicted_class=predicted,
        vote_counts=counts,
        tie_occurred=tie_occurred,
        tie_breaker_used=tie_breaker_used,
        filter_mask=mask,
        marginal=total / mask.n_kept,
    )
