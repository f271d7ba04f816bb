import itertools
import math

import numpy as np
import pytest

from zerotta.ensemble import (
    EnsembleParams,
    binomial_error_pmf,
    condorcet_profile,
    label_group_marginal_error,
    majority_error,
    monte_carlo_majority_error,
    risk_bound_check,
)


def enumerate_majority_error(n: int, eps: float) -> float:
    """Oracle: walk all 2^n voter outcomes and accumulate strict-majority losses."""
    total = 0.0
    threshold = n // 2 + 1
    for outcome in itertools.product((0, 1), repeat=n):
        wrong = sum(outcome)
        if wrong >= threshold:
            total += (eps ** wrong) * ((1.0 - eps) ** (n - wrong))
    return total


def enumerate_pmf(n: int, k: int, eps: float) -> float:
    """Oracle: probability of exactly k wrong votes by exhaustive enumeration."""
    total = 0.0
    for outcome in itertools.product((0, 1), repeat=n):
        if sum(outcome) == k:
            total += (eps ** k) * ((1.0 - eps) ** (n - k))
    return total


class TestBinomialPmf:
    def test_hand_value_five_choose_three(self):
        # Enumeration over 2^5 outcomes gives 10 * 0.4^3 * 0.6^2 = 0.2304.
        assert enumerate_pmf(5, 3, 0.4) == pytest.approx(0.2304, abs=1e-15)
        assert binomial_error_pmf(EnsembleParams(5, 0.4), 3) == pytest.approx(0.2304,
                                                                              abs=1e-12)

    def test_zero_epsilon(self):
        params = EnsembleParams(7, 0.0)
        assert binomial_error_pmf(params, 0) == 1.0
        for k in range(1, 8):
            assert binomial_error_pmf(params, k) == 0.0

    def test_one_epsilon(self):
        params = EnsembleParams(4, 1.0)
        assert binomial_error_pmf(params, 4) == 1.0
        assert binomial_error_pmf(params, 0) == 0.0

    @pytest.mark.parametrize("n", [1, 5, 17, 100, 1000, 10_000])
    def test_normalization(self, n):
        params = EnsembleParams(n, 0.37)
        total = math.fsum(binomial_error_pmf(params, k) for k in range(n + 1))
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_k_out_of_range(self):
        with pytest.raises(ValueError, match="k must be"):
            binomial_error_pmf(EnsembleParams(3, 0.2), 4)
        with pytest.raises(ValueError, match="k must be"):
            binomial_error_pmf(EnsembleParams(3, 0.2), -1)

    def test_params_validation(self):
        with pytest.raises(ValueError, match="n_voters"):
            EnsembleParams(0, 0.5)
        with pytest.raises(ValueError, match="epsilon"):
            EnsembleParams(3, 1.5)


class TestMajorityError:
    def test_hand_value_three_voters(self):
        # 3 * 0.4^2 * 0.6 + 0.4^3 = 0.288 + 0.064 = 0.352
        assert majority_error(EnsembleParams(3, 0.4)) == pytest.approx(0.352, abs=1e-12)

    def test_single_voter_is_epsilon(self):
        for eps in (0.0, 0.25, 0.5, 0.9):
            assert majority_error(EnsembleParams(1, eps)) == pytest.approx(eps, abs=1e-12)

    def test_fair_coin_odd_committee(self):
        for n in (1, 3, 5, 9, 21):
            assert majority_error(EnsembleParams(n, 0.5)) == pytest.approx(0.5, abs=1e-12)

    @pytest.mark.parametrize("eps", [0.1, 0.3, 0.45])
    @pytest.mark.parametrize("n", range(1, 13))
    def test_matches_exhaustive_enumeration(self, n, eps):
        assert majority_error(EnsembleParams(n, eps)) == pytest.approx(
            enumerate_majority_error(n, eps), abs=1e-12)


class TestCondorcetProfile:
    def test_hand_series(self):
        profile = condorcet_profile(0.3, [1, 3, 5])
        values = [v for _, v in profile.points]
        np.testing.assert_allclose(values, [0.3, 0.216, 0.16308], atol=1e-12)
        assert profile.decreasing_guaranteed

    def test_zero_epsilon_all_zero(self):
        profile = condorcet_profile(0.0, [1, 3, 5, 7])
        assert all(v == 0.0 for _, v in profile.points)

    def test_strictly_decreasing_sweep(self):
        ns = list(range(1, 23, 2))
        for eps in np.arange(0.05, 0.50, 0.05):
            values = [v for _, v in condorcet_profile(float(eps), ns).points]
            assert all(b < a for a, b in zip(values, values[1:]))

    def test_degradation_above_one_half(self):
        ns = list(range(1, 23, 2))
        for eps in np.arange(0.55, 1.00, 0.05):
            profile = condorcet_profile(float(eps), ns)
            assert not profile.decreasing_guaranteed
            values = [v for _, v in profile.points]
            assert all(b > a for a, b in zip(values, values[1:]))

    def test_input_validation(self):
        with pytest.raises(ValueError, match="odd"):
            condorcet_profile(0.3, [1, 2, 3])
        with pytest.raises(ValueError, match="ascending"):
            condorcet_profile(0.3, [5, 3])
        with pytest.raises(ValueError, match="empty"):
            condorcet_profile(0.3, [])


class TestMonteCarlo:
    def test_zero_epsilon_exact_zero(self):
        mc = monte_carlo_majority_error(EnsembleParams(9, 0.0), trials=10_000, seed=1)
        assert mc.estimate == 0.0
        assert mc.std_error == 0.0

    def test_matches_analytic_within_four_se(self):
        params = EnsembleParams(3, 0.4)
        mc = monte_carlo_majority_error(params, trials=1_000_000, seed=7)
        analytic = majority_error(params)
        assert abs(mc.estimate - analytic) <= 4.0 * mc.std_error
        assert abs(mc.estimate - 0.352) < 0.002

    def test_even_n_reconciles_via_half_split_rate(self):
        params = EnsembleParams(6, 0.3)
        mc = monte_carlo_majority_error(params, trials=500_000, seed=11)
        strict = mc.estimate - 0.5 * mc.half_split_rate
        # crude bound: the combined estimator has variance below 1/(4 trials)
        assert abs(strict - majority_error(params)) < 0.004
        half_analytic = binomial_error_pmf(params, 3)
        assert abs(mc.half_split_rate - half_analytic) < 0.004

    def test_deterministic_given_seed(self):
        params = EnsembleParams(5, 0.25)
        a = monte_carlo_majority_error(params, trials=250_000, seed=3)
        b = monte_carlo_majority_error(params, trials=250_000, seed=3)
        assert a == b

    def test_odd_n_has_no_half_splits(self):
        mc = monte_carlo_majority_error(EnsembleParams(7, 0.4), trials=50_000, seed=5)
        assert mc.half_split_rate == 0.0

    def test_trials_validation(self):
        with pytest.raises(ValueError, match="trials"):
            monte_carlo_majority_error(EnsembleParams(3, 0.1), trials=0)


class TestRiskBound:
    def test_identical_rows_degenerate(self):
        rows = np.tile(np.array([0.2, 0.5, 0.3]), (4, 1))
        for loss in ("l1", "l2"):
            check = risk_bound_check(1, rows, loss)
            assert check.lhs == pytest.approx(check.rhs, abs=1e-12)
            assert check.holds

    def test_hand_value_l1(self):
        rows = np.array([[1.0, 0.0], [0.0, 1.0]])
        check = risk_bound_check(0, rows, "l1")
        assert check.lhs == pytest.approx(1.0, abs=1e-12)
        assert check.rhs == pytest.approx(1.0, abs=1e-12)
        assert check.holds

    def test_random_sweep_both_losses(self):
        rng = np.random.default_rng(13)
        for _ in range(1000):
            c = int(rng.integers(2, 8))
            n = int(rng.integers(1, 12))
            rows = rng.dirichlet(np.ones(c), size=n)
            label = int(rng.integers(0, c))
            for loss in ("l1", "l2"):
                assert risk_bound_check(label, rows, loss).holds

    def test_unknown_loss(self):
        with pytest.raises(ValueError, match="loss"):
            risk_bound_check(0, np.array([[1.0, 0.0]]), "huber")

    def test_label_out_of_range(self):
        with pytest.raises(ValueError, match="out of range"):
            risk_bound_check(2, np.array([[1.0, 0.0]]), "l1")


def _calibrated_groups(rng, n_classes, group_size, eps):
    """Per-label groups from a calibrated noisy classifier.

    Each sample predicts its true label with probability 1 - eps and a
    uniformly random wrong label otherwise; the emitted distribution puts
    exactly 1 - eps on the predicted class, which makes confidence match
    accuracy by construction.
    """
    groups = {}
    for label in range(n_classes):
        rows = np.full((group_size, n_classes), eps / (n_classes - 1))
        for i in range(group_size):
            if rng.random() < 1.0 - eps:
                predicted = label
            else:
                others = [c for c in range(n_classes) if c != label]
                predicted = others[rng.integers(0, len(others))]
            rows[i] = eps / (n_classes - 1)
            rows[i, predicted] = 1.0 - eps
        groups[label] = rows
    return groups


class TestLabelGroupMarginalError:
    def test_single_sample_groups_match_base_error(self):
        groups = {
            0: np.array([[0.7, 0.2, 0.1]]),  # correct
            1: np.array([[0.6, 0.3, 0.1]]),  # wrong
            2: np.array([[0.1, 0.2, 0.7]]),  # correct
        }
        report = label_group_marginal_error(groups)
        for stats in report.per_label:
            assert stats.marginal_error == stats.base_error

    def test_majority_fixes_the_mean(self):
        # 2 of 3 predict the label with symmetric confidence: base error is
        # 1/3 while the group mean lands on the true class.
        group = np.array([
            [0.8, 0.2],
            [0.8, 0.2],
            [0.2, 0.8],
        ])
        report = label_group_marginal_error({0: group})
        assert report.per_label[0].base_error == pytest.approx(1.0 / 3.0, abs=1e-12)
        assert report.per_label[0].marginal_error == 0.0

    def test_all_wrong(self):
        group = np.tile(np.array([0.1, 0.9]), (4, 1))
        report = label_group_marginal_error({0: group})
        assert report.per_label[0].base_error == 1.0
        assert report.per_label[0].marginal_error == 1.0

    def test_calibrated_generator_dominance(self):
        # Averaged over many seeds, marginalizing within a label does not
        # do worse than the per-sample error rate.
        deltas = []
        for seed in range(100):
            rng = np.random.default_rng(seed)
            eps = float(rng.uniform(0.1, 0.45))
            groups = _calibrated_groups(rng, n_classes=5, group_size=15, eps=eps)
            report = label_group_marginal_error(groups)
            deltas.append(report.mean_marginal_error - report.mean_base_error)
        assert np.mean(deltas) <= 0.0

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            label_group_marginal_error({})
