import numpy as np
import pytest

from conftest import brute_tournament_probs

from sgoal.core import Relation
from sgoal.errors import UsageError
from sgoal.selection import (
    SelectionScheme,
    exact_probs,
    proportional,
    ranking,
    ranking_rates,
    roulette,
    select_group,
    select_many,
    select_one,
    tournament,
    uniform,
)
from sgoal.stats import chisquare_gof

MIN, MAX = Relation.MINIMIZE, Relation.MAXIMIZE


def random_fitness(rng, lam=None, ties=True):
    lam = int(rng.integers(1, 7)) if lam is None else lam
    if ties and rng.random() < 0.5:
        return rng.choice([1.0, 2.0, 3.0], size=lam)  # integer pool forces ties
    return rng.normal(size=lam)


class TestExactProbs:
    def test_uniform_quarters(self):
        assert np.allclose(exact_probs(uniform(), [5, 1, 9, 2], MIN), 0.25, atol=1e-12)

    def test_roulette_raw_rates(self):
        p = exact_probs(roulette(), np.array([1.0, 3.0]), MAX)
        assert np.allclose(p, [0.25, 0.75], atol=1e-12)

    def test_ranking_example(self):
        p = exact_probs(ranking(), np.array([1.0, 2.0, 3.0]), MIN)
        assert np.allclose(p, [0.5, 1 / 3, 1 / 6], atol=1e-12)

    def test_tournament_two_of_two(self):
        p = exact_probs(tournament(2), np.array([1.0, 2.0]), MIN)
        assert np.allclose(p, [7 / 12, 5 / 12], atol=1e-12)

    def test_tournament_m1_is_uniform(self):
        f = np.array([4.0, 1.0, 3.0])
        p = exact_probs(tournament(1), f, MIN)
        assert np.allclose(p, 1 / 3, atol=1e-12)

    @pytest.mark.parametrize("seed", range(20))
    def test_tournament_matches_brute_enumeration(self, seed):
        rng = np.random.default_rng(seed)
        f = random_fitness(rng)
        m = int(rng.integers(1, 4))
        relation = MIN if rng.random() < 0.5 else MAX
        ours = exact_probs(tournament(m), f, relation)
        oracle = brute_tournament_probs(f, relation, m)
        assert np.allclose(ours, oracle, atol=1e-12)

    @pytest.mark.parametrize("seed", range(30))
    def test_probabilities_sum_to_one(self, seed):
        rng = np.random.default_rng(100 + seed)
        f = random_fitness(rng)
        schemes = [uniform(), proportional(), ranking(), tournament(2), tournament(3)]
        for scheme in schemes:
            assert abs(exact_probs(scheme, f, MIN).sum() - 1.0) <= 1e-12
        assert abs(exact_probs(roulette(), np.abs(f) + 0.1, MAX).sum() - 1.0) <= 1e-12


class TestMonotonicity:
    @pytest.mark.parametrize("seed", range(20))
    def test_better_fitness_strictly_larger_probability(self, seed):
        rng = np.random.default_rng(200 + seed)
        f = random_fitness(rng, lam=int(rng.integers(2, 7)))
        relation = MIN if rng.random() < 0.5 else MAX
        cases = [(proportional(), relation), (ranking(), relation)]
        if np.all(f >= 0) and f.sum() > 0:
            cases.append((roulette(), MAX))
        for scheme, rel in cases:
            p = exact_probs(scheme, f, rel)
            for i in range(f.size):
                for j in range(f.size):
                    if rel.better(f[j], f[i]):
                        assert p[i] < p[j]
                    elif f[i] == f[j]:
                        assert p[i] == pytest.approx(p[j], abs=1e-12)

    def test_ranking_invariant_under_monotone_transform(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            f = random_fitness(rng)
            g = np.exp(f) + 5.0  # strictly increasing transform
            assert np.allclose(
                exact_probs(ranking(), f, MIN), exact_probs(ranking(), g, MIN), atol=1e-12
            )

    def test_ranking_rates_definition(self):
        rates = ranking_rates(np.array([1.0, 2.0, 3.0]), MIN)
        assert np.array_equal(rates, [3.0, 2.0, 1.0])
        rates = ranking_rates(np.array([2.0, 1.0, 1.0]), MIN)
        assert np.array_equal(rates, [1.0, 2.0, 2.0])


class TestErrors:
    def test_negative_rate_rejected(self):
        with pytest.raises(UsageError):
            exact_probs(roulette(rate_fn=lambda v: v - 10.0), np.array([1.0, 2.0]), MAX)

    def test_zero_total_rate_rejected(self):
        with pytest.raises(UsageError):
            exact_probs(roulette(), np.array([0.0, 0.0]), MAX)

    def test_roulette_raw_requires_maximize(self):
        with pytest.raises(UsageError):
            exact_probs(roulette(), np.array([1.0, 2.0]), MIN)

    def test_tournament_size_validated(self):
        with pytest.raises(UsageError):
            tournament(0)

    def test_unknown_kind_rejected(self):
        with pytest.raises(UsageError):
            SelectionScheme("lottery")

    def test_nan_fitness_rejected(self):
        with pytest.raises(UsageError):
            exact_probs(uniform(), np.array([1.0, float("nan")]), MIN)


class TestSampling:
    def test_singleton_always_zero(self, rng):
        assert select_one(uniform(), np.array([3.0]), MIN, rng) == 0
        assert select_one(tournament(3), np.array([3.0]), MIN, rng) == 0

    def test_select_one_uniform_frequencies(self):
        rng = np.random.default_rng(11)
        counts = np.zeros(2)
        n = 20_000
        for _ in range(n):
            counts[select_one(uniform(), np.array([1.0, 2.0]), MIN, rng)] += 1
        assert chisquare_gof(counts, [0.5, 0.5], alpha=0.001).passed

    def test_select_one_ranking_frequencies(self):
        rng = np.random.default_rng(12)
        f = np.array([1.0, 2.0, 3.0])
        counts = np.zeros(3)
        for _ in range(20_000):
            counts[select_one(ranking(), f, MIN, rng)] += 1
        assert chisquare_gof(counts, [0.5, 1 / 3, 1 / 6], alpha=0.001).passed

    @pytest.mark.parametrize(
        "scheme", [uniform(), proportional(), ranking(), tournament(2), tournament(3)]
    )
    def test_select_many_matches_exact_probs(self, scheme):
        rng = np.random.default_rng(13)
        f = np.array([1.0, 2.0, 2.0, 5.0])
        probs = exact_probs(scheme, f, MIN)
        draws = select_many(scheme, f, MIN, 100_000, rng)
        counts = np.bincount(draws, minlength=f.size)
        result = chisquare_gof(counts, probs, alpha=0.001)
        assert result.passed, f"{scheme.kind}: p={result.pvalue}"

    def test_select_many_tournament_mechanism_matches_scalar(self):
        # same law for the scalar and the vectorized tournament paths
        f = np.array([3.0, 1.0, 2.0])
        rng = np.random.default_rng(14)
        scalar_counts = np.zeros(3)
        for _ in range(20_000):
            scalar_counts[select_one(tournament(2), f, MIN, rng)] += 1
        vector_counts = np.bincount(
            select_many(tournament(2), f, MIN, 20_000, rng), minlength=3
        )
        probs = exact_probs(tournament(2), f, MIN)
        assert chisquare_gof(scalar_counts, probs, alpha=0.001).passed
        assert chisquare_gof(vector_counts, probs, alpha=0.001).passed


class TestSelectGroup:
    def test_single_draw_reduces_to_select_one(self):
        rng = np.random.default_rng(15)
        group = select_group(uniform(), np.array([1.0, 2.0]), 1, MIN, rng)
        assert len(group) == 1 and group[0] in (0, 1)

    def test_group_size_validated(self, rng):
        with pytest.raises(UsageError):
            select_group(uniform(), np.array([1.0]), 0, MIN, rng)

    def test_uniform_pairs_quarter_each(self):
        rng = np.random.default_rng(16)
        counts = np.zeros(4)
        n = 40_000
        for _ in range(n):
            i, j = select_group(uniform(), np.array([1.0, 2.0]), 2, MIN, rng)
            counts[2 * i + j] += 1
        assert chisquare_gof(counts, [0.25] * 4, alpha=0.001).passed

    def test_pair_frequencies_factorize(self):
        # independence of the two coordinates under ranking selection
        rng = np.random.default_rng(17)
        f = np.array([1.0, 2.0, 3.0])
        p = exact_probs(ranking(), f, MIN)
        joint = np.zeros((3, 3))
        n = 60_000
        for _ in range(n):
            i, j = select_group(ranking(), f, 2, MIN, rng)
            joint[i, j] += 1
        expected = np.outer(p, p).ravel()
        assert chisquare_gof(joint.ravel(), expected, alpha=0.001).passed
