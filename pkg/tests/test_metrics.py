"""Ranking metrics against hand evaluations and brute-force oracles."""

from __future__ import annotations

import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import naive_average_precision, naive_rbo_exponential, naive_rbo_uniform
from rankfair.errors import ValidationError
from rankfair.metrics import (
    average_precision,
    mean_average_precision,
    overlap_at_depth,
    rbo_exponential,
    rbo_uniform,
    reversed_list_rbo,
)


class TestOverlapAtDepth:
    def test_hand_case(self):
        assert overlap_at_depth(["a", "b", "c"], ["c", "b", "a"], 2) == 1

    def test_identical_rankings(self):
        ranking = list("abcdef")
        for d in range(1, 7):
            assert overlap_at_depth(ranking, ranking, d) == d

    def test_disjoint_prefixes(self):
        assert overlap_at_depth(["a", "b"], ["b", "a"], 1) == 0

    def test_depth_out_of_range(self):
        with pytest.raises(ValidationError):
            overlap_at_depth(["a"], ["a"], 2)
        with pytest.raises(ValidationError):
            overlap_at_depth(["a"], ["a"], 0)


class TestRboUniform:
    def test_identical_lists_exactly_one(self):
        score = rbo_uniform(["a", "b", "c"], ["a", "b", "c"])
        assert score.value == 1.0
        assert score.depth == 3

    def test_two_item_swap_is_half(self):
        # (0/1 + 2/2) / 2
        assert rbo_uniform(["a", "b"], ["b", "a"]).value == 0.5

    def test_four_item_reverse_is_five_twelfths(self):
        # (0 + 0 + 2/3 + 1) / 4
        score = rbo_uniform(list("abcd"), list("dcba"))
        assert score.value == pytest.approx(5 / 12, abs=1e-15)

    def test_three_item_adjacent_swap(self):
        # (1 + 1/2 + 1) / 3
        score = rbo_uniform(["a", "b", "c"], ["a", "c", "b"])
        assert score.value == pytest.approx(5 / 6, abs=1e-15)

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValidationError, match="length"):
            rbo_uniform(["a"], ["a", "b"])

    def test_non_conjoint_rejected(self):
        with pytest.raises(ValidationError, match="conjoint"):
            rbo_uniform(["a", "b"], ["a", "c"])

    def test_duplicates_rejected(self):
        with pytest.raises(ValidationError, match="duplicate"):
            rbo_uniform(["a", "a"], ["a", "a"])

    @settings(max_examples=80, deadline=None)
    @given(st.integers(1, 500), st.randoms(use_true_random=False))
    def test_self_similarity_exactly_one(self, size, rng):
        ranking = list(range(size))
        rng.shuffle(ranking)
        assert rbo_uniform(ranking, ranking).value == 1.0

    @settings(max_examples=80, deadline=None)
    @given(st.integers(1, 200), st.randoms(use_true_random=False))
    def test_symmetry_and_oracle(self, size, rng):
        s = list(range(size))
        t = list(range(size))
        rng.shuffle(s)
        rng.shuffle(t)
        forward = rbo_uniform(s, t).value
        backward = rbo_uniform(t, s).value
        assert forward == backward
        assert forward == pytest.approx(naive_rbo_uniform(s, t), abs=1e-12)
        assert 0.0 <= forward <= 1.0

    def test_reverse_matches_closed_form(self):
        for k in (2, 3, 7, 50):
            ranking = list(range(k))
            measured = rbo_uniform(ranking, ranking[::-1]).value
            assert measured == pytest.approx(reversed_list_rbo(k), abs=1e-15)

    def test_reverse_small_depths_are_half(self):
        assert reversed_list_rbo(2) == 0.5
        assert reversed_list_rbo(3) == 0.5

    def test_reverse_limit_approaches_one_minus_ln2(self):
        assert reversed_list_rbo(10_000) == pytest.approx(1 - math.log(2), abs=0.002)

    def test_adjacent_swap_perturbation_bounded(self):
        # Swapping adjacent items changes the score by at most (1/k) * H_k;
        # checked against the oracle rather than asserted analytically.
        rng = random.Random(5)
        for _ in range(20):
            k = rng.randint(2, 60)
            s = list(range(k))
            t = s[:]
            rng.shuffle(t)
            i = rng.randrange(k - 1)
            swapped = t[:]
            swapped[i], swapped[i + 1] = swapped[i + 1], swapped[i]
            before = naive_rbo_uniform(s, t)
            after = naive_rbo_uniform(s, swapped)
            bound = sum(1.0 / d for d in range(1, k + 1)) / k
            assert abs(after - before) <= bound + 1e-12
            assert rbo_uniform(s, swapped).value == pytest.approx(after, abs=1e-12)


class TestRboExponential:
    def test_identical_finite_depth(self):
        score = rbo_exponential(["a", "b", "c"], ["a", "b", "c"], p=0.9)
        assert score.value == pytest.approx(0.1 * (1 + 0.9 + 0.81), abs=1e-12)

    def test_swapped_pair(self):
        score = rbo_exponential(["a", "b"], ["b", "a"], p=0.5)
        assert score.value == pytest.approx(0.25, abs=1e-15)

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.5, 1.5])
    def test_pathological_p_rejected(self, p):
        with pytest.raises(ValidationError, match="p must"):
            rbo_exponential(["a", "b"], ["b", "a"], p=p)

    @settings(max_examples=40, deadline=None)
    @given(
        st.integers(1, 80),
        st.floats(0.05, 0.95),
        st.randoms(use_true_random=False),
    )
    def test_oracle_and_range(self, size, p, rng):
        s = list(range(size))
        t = list(range(size))
        rng.shuffle(s)
        rng.shuffle(t)
        value = rbo_exponential(s, t, p=p).value
        assert value == pytest.approx(naive_rbo_exponential(s, t, p), abs=1e-12)
        # Exact value is 1 - p^k < 1, but it can round up to 1.0 once p^k
        # underflows; only the closed interval is checkable in floats.
        assert 0.0 <= value <= 1.0


class TestAveragePrecision:
    def test_perfect_ranking(self):
        score = average_precision(["r1", "r2", "n1", "n2"], {"r1", "r2"})
        assert score.value == 1.0

    def test_hand_case(self):
        score = average_precision(["r1", "n", "r2"], {"r1", "r2"})
        assert score.value == pytest.approx(5 / 6, abs=1e-15)

    def test_single_relevant_at_rank_four(self):
        score = average_precision(["n1", "n2", "n3", "r"], {"r"})
        assert score.value == 0.25

    def test_empty_relevant_rejected(self):
        with pytest.raises(ValidationError, match="empty relevant"):
            average_precision(["a"], set())

    def test_relevant_outside_ranking_rejected(self):
        with pytest.raises(ValidationError, match="missing from ranking"):
            average_precision(["a"], {"ghost"})

    def test_tail_reordering_of_non_relevant_is_invariant(self):
        ranking = ["r1", "n1", "r2", "n2", "n3", "n4"]
        relevant = {"r1", "r2"}
        base = average_precision(ranking, relevant).value
        for tail in (["n3", "n2", "n4"], ["n4", "n3", "n2"]):
            assert average_precision(ranking[:3] + tail, relevant).value == base

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 100), st.randoms(use_true_random=False))
    def test_oracle_and_range(self, size, rng):
        ranking = [f"i{j}" for j in range(size)]
        rng.shuffle(ranking)
        relevant = set(rng.sample(ranking, rng.randint(1, size)))
        value = average_precision(ranking, relevant).value
        assert value == pytest.approx(naive_average_precision(ranking, relevant), abs=1e-12)
        assert 0.0 < value <= 1.0


class TestMeanAveragePrecision:
    def test_arithmetic_mean(self):
        aps = [
            average_precision(["r", "n"], {"r"}),
            average_precision(["n", "r"], {"r"}),
        ]
        assert [a.value for a in aps] == [1.0, 0.5]
        assert mean_average_precision(aps).value == 0.75

    def test_singleton(self):
        ap = average_precision(["n", "r"], {"r"})
        assert mean_average_precision([ap]).value == ap.value

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            mean_average_precision([])

    def test_matches_spreadsheet_style_sum(self):
        rng = random.Random(81)
        aps = []
        for _ in range(81):
            size = rng.randint(2, 30)
            ranking = [f"i{j}" for j in range(size)]
            rng.shuffle(ranking)
            relevant = set(rng.sample(ranking, rng.randint(1, size)))
            aps.append(average_precision(ranking, relevant))
        total = 0.0
        for ap in aps:  # plain running sum, the way a spreadsheet would
            total += ap.value
        assert mean_average_precision(aps).value == pytest.approx(total / 81, abs=1e-12)
