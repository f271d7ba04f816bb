"""Majority-vote error model for independent voters.

Covers the binomial probability of exactly k wrong votes among N, the
cumulative probability that a wrong label reaches a strict majority, the
jury-theorem monotonicity profile, a seeded Monte-Carlo oracle, the
triangle-inequality risk bound for averaged predictions, and per-label
marginalization error statistics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping

import numpy as np

from .core import validate_probability_rows


@dataclass(frozen=True)
class EnsembleParams:
    """N independent voters, each wrong with probability epsilon."""

    n_voters: int
    epsilon: float

    def __post_init__(self):
        if self.n_voters < 1:
            raise ValueError(f"n_voters must be >= 1, got {self.n_voters}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must be in [0, 1], got {self.epsilon}")


@lru_cache(maxsize=8)
def _log_binomial_row(n: int) -> tuple[float, ...]:
    """log C(n, k) for k = 0..n, from exact integer coefficients.

    Logging the exact coefficient keeps the error at one ulp of the (small)
    result, where a log-gamma difference at n ~ 1e4 loses ~1e-11 to the
    cancellation of huge intermediates; that would break the 1e-12 PMF
    normalization guarantee.
    """
    logs = [0.0] * (n + 1)
    coeff = 1
    for k in range(n):
        coeff = coeff * (n - k) // (k + 1)
        logs[k + 1] = math.log(coeff)
    return tuple(logs)


def binomial_error_pmf(params: EnsembleParams, k: int) -> float:
    """Probability that exactly k of N voters are wrong: C(N,k) e^k (1-e)^(N-k).

    Combined in log space so sweeps with N in the thousands neither overflow
    the coefficient nor underflow prematurely.
    """
    n, eps = params.n_voters, params.epsilon
    if not 0 <= k <= n:
        raise ValueError(f"k must be in [0, {n}], got {k}")
    if eps == 0.0:
        return 1.0 if k == 0 else 0.0
    if eps == 1.0:
        return 1.0 if k == n else 0.0
    log_coeff = _log_binomial_row(n)[k]
    return math.exp(log_coeff + k * math.log(eps) + (n - k) * math.log1p(-eps))


def majority_error(params: EnsembleParams) -> float:
    """Probability that a strict majority of voters is wrong.

    Sums the binomial tail from floor(N/2 + 1) upward; for even N an exact
    half split carries no mass here (see the Monte-Carlo oracle for the
    coin-flip treatment of half splits).
    """
    n = params.n_voters
    k_min = n // 2 + 1
    return math.fsum(binomial_error_pmf(params, k) for k in range(k_min, n + 1))


@dataclass(frozen=True)
class CondorcetProfile:
    """Majority error as a function of committee size at fixed epsilon."""

    epsilon: float
    points: tuple[tuple[int, float], ...]
    decreasing_guaranteed: bool


def condorcet_profile(epsilon: float, odd_ns: list[int]) -> CondorcetProfile:
    """Majority error across ascending odd committee sizes.

    For epsilon < 0.5 the series is strictly decreasing (jury theorem);
    otherwise the profile is still returned but flagged as carrying no
    monotonicity guarantee.
    """
    if not odd_ns:
        raise ValueError("odd_ns is empty")
    for n in odd_ns:
        if n < 1 or n % 2 == 0:
            raise ValueError(f"committee sizes must be odd and positive, got {n}")
    if any(b <= a for a, b in zip(odd_ns, odd_ns[1:])):
        raise ValueError("odd_ns must be strictly ascending")
    points = tuple(
        (n, majority_error(EnsembleParams(n_voters=n, epsilon=epsilon))) for n in odd_ns
    )
    return CondorcetProfile(
        epsilon=epsilon, points=points, decreasing_guaranteed=epsilon < 0.5
    )


@dataclass(frozen=True)
class MonteCarloMajority:
    """Simulated majority-error estimate.

    ``estimate`` counts strict-majority losses plus half splits resolved by
    a fair coin (half splits exist only for even N and are reported
    separately so the strict-tail quantity can be reconciled:
    strict ~= estimate - 0.5 * half_split_rate).
    """

    estimate: float
    std_error: float
    half_split_rate: float
    trials: int


def monte_carlo_majority_error(params: EnsembleParams, trials: int,
                               seed: int = 0) -> MonteCarloMajority:
    """Estimate the majority error by simulating Bernoulli voters.

    Trials are processed in fixed-size chunks, each with an independent
    generator derived from (seed, chunk index); aggregation is a plain sum,
    so the result does not depend on scheduling order and is reproducible
    for a given seed.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    n, eps = params.n_voters, params.epsilon
    threshold = n // 2 + 1
    chunk = 100_000
    errors = 0
    half_splits = 0
    for part, start in enumerate(range(0, trials, chunk)):
        size = min(chunk, trials - start)
        rng = np.random.default_rng([seed, part])
        wrong = rng.binomial(n, eps, size=size)
        strict = wrong >= threshold
        if n % 2 == 0:
            half = wrong == n // 2
            half_splits += int(half.sum())
            coin = rng.random(size=size) < 0.5
            errors += int((strict | (half & coin)).sum())
        else:
            errors += int(strict.sum())
    estimate = errors / trials
    std_error = math.sqrt(max(estimate * (1.0 - estimate), 0.0) / trials)
    return MonteCarloMajority(
        estimate=estimate,
        std_error=std_error,
        half_split_rate=half_splits / trials,
        trials=trials,
    )


@dataclass(frozen=True)
class RiskBoundCheck:
    lhs: float
    rhs: float
    holds: bool


_LOSSES = {
    "l1": lambda a, b: float(np.abs(a - b).sum()),
    "l2": lambda a, b: float(np.linalg.norm(a - b)),
}


def risk_bound_check(label: int, probs: np.ndarray, loss: str = "l1") -> RiskBoundCheck:
    """Check that the loss of the averaged prediction is bounded by the
    average per-view loss.

    lhs = loss(onehot(label), mean of rows); rhs = mean over rows of
    loss(onehot(label), row).  Holds for any loss satisfying the triangle
    inequality, which both supported norms do.
    """
    if loss not in _LOSSES:
        raise ValueError(f"loss must be one of {sorted(_LOSSES)}, got {loss!r}")
    arr = validate_probability_rows(probs, "probs")
    if arr.ndim != 2:
        raise ValueError(f"probs must be 2-D, got shape {arr.shape}")
    n, c = arr.shape
    if not 0 <= label < c:
        raise ValueError(f"label {label} out of range [0, {c})")
    onehot = np.zeros(c)
    onehot[label] = 1.0
    fn = _LOSSES[loss]
    lhs = fn(onehot, arr.mean(axis=0))
    rhs = math.fsum(fn(onehot, row) for row in arr) / n
    return RiskBoundCheck(lhs=lhs, rhs=rhs, holds=lhs <= rhs + 1e-12)


@dataclass(frozen=True)
class LabelGroupStats:
    label: int
    group_size: int
    base_error: float
    marginal_error: float


@dataclass(frozen=True)
class LabelGroupReport:
    """Per-label base error vs. error of the group-averaged prediction."""

    per_label: tuple[LabelGroupStats, ...]
    mean_base_error: float
    mean_marginal_error: float


def label_group_marginal_error(groups: Mapping[int, np.ndarray]) -> LabelGroupReport:
    """Compare per-sample error against the error of the group mean.

    Args:
        groups: mapping from true label to the (n_y, C) probability rows of
            all samples carrying that label.

    For each label y, base error is the fraction of rows whose argmax is not
    y; marginal error is 1 if the argmax of the group-mean distribution is
    not y, else 0.  Both are averaged over the labels present.
    """
    if not groups:
        raise ValueError("groups is empty")
    stats = []
    for label in sorted(groups):
        rows = validate_probability_rows(groups[label], f"group[{label}]")
        if rows.ndim != 2 or rows.shape[0] == 0:
            raise ValueError(f"group[{label}] must be a non-empty 2-D matrix")
        c = rows.shape[1]
        if not 0 <= label < c:
            raise ValueError(f"label {label} out of range [0, {c})")
        preds = rows.argmax(axis=1)
        base = float(np.mean(preds != label))
        marginal = 0.0 if int(rows.mean(axis=0).argmax()) == label else 1.0
        stats.append(LabelGroupStats(
            label=int(label), group_size=rows.shape[0],
            base_error=base, marginal_error=marginal,
        ))
    return LabelGroupReport(
        per_label=tuple(stats),
        mean_base_error=float(np.mean([s.base_error for s in stats])),
        mean_marginal_error=float(np.mean([s.marginal_error for s in stats])),
    )
