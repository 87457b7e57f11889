"""TKQR formula behavior: fixed points, oracle agreement, order sensitivity."""

from __future__ import annotations

import math
import random

import pytest
from hypothesis import given, strategies as st

from ontoagent.metrics import HitSequence, compute_tkqr, turn_discount


def brute_force_tkqr(hits: list[int], k: int) -> tuple[float, float, float]:
    """Independent direct summation of the defining formulas."""
    dcg = 0.0
    for i, h in enumerate(hits, start=1):
        dcg += h / math.log2(i + 1)
    idcg = 0.0
    for i in range(1, min(len(hits), k) + 1):
        idcg += 1 / math.log2(i + 1)
    return dcg, idcg, (dcg / idcg if idcg > 0 else 0.0)


class TestFixedPoints:
    def test_all_prefix_hits_is_perfect(self):
        assert compute_tkqr(HitSequence((1, 1, 1), k=5)).tkqr == 1.0

    def test_all_misses_is_zero(self):
        assert compute_tkqr(HitSequence((0, 0, 0), k=3)).tkqr == 0.0

    def test_hand_derived_mixed_sequence(self):
        values = compute_tkqr(HitSequence((1, 0, 1), k=3))
        assert values.dcg == pytest.approx(1.5, abs=1e-12)
        assert values.idcg == pytest.approx(1 + 1 / math.log2(3) + 0.5, abs=1e-12)
        expected = 1.5 / (1 + 1 / math.log2(3) + 0.5)
        assert values.tkqr == pytest.approx(expected, abs=1e-12)
        assert abs(values.tkqr - 0.703918) <= 1e-6

    def test_no_questions_means_zero(self):
        values = compute_tkqr(HitSequence((), k=4))
        assert values.tkqr == 0.0
        assert values.dcg == 0.0
        assert values.idcg == 0.0

    def test_ideal_prefix_capped_by_k(self):
        # five questions, two requirements: the ideal is hits at turns 1 and 2
        values = compute_tkqr(HitSequence((1, 1, 0, 0, 0), k=2))
        assert values.tkqr == 1.0


class TestOracleAgreement:
    def test_random_sequences_match_brute_force(self):
        rng = random.Random(42)
        for _ in range(200):
            k = rng.randint(1, 10)
            n = rng.randint(0, 20)
            hits = [0] * n
            for idx in rng.sample(range(n), min(n, rng.randint(0, k))):
                hits[idx] = 1
            dcg, idcg, tkqr = brute_force_tkqr(hits, k)
            values = compute_tkqr(HitSequence(tuple(hits), k=k))
            assert values.dcg == pytest.approx(dcg, abs=1e-12)
            assert values.idcg == pytest.approx(idcg, abs=1e-12)
            assert values.tkqr == pytest.approx(tkqr, abs=1e-12)


@st.composite
def hit_sequences(draw):
    n = draw(st.integers(min_value=0, max_value=20))
    k = draw(st.integers(min_value=1, max_value=10))
    n_hits = draw(st.integers(min_value=0, max_value=min(n, k)))
    positions = draw(
        st.sets(st.integers(min_value=0, max_value=max(n - 1, 0)), min_size=n_hits, max_size=n_hits)
        if n
        else st.just(set())
    )
    hits = [1 if i in positions else 0 for i in range(n)]
    return hits, k


class TestProperties:
    @given(hit_sequences())
    def test_range_and_oracle(self, case):
        hits, k = case
        values = compute_tkqr(HitSequence(tuple(hits), k=k))
        assert 0.0 <= values.tkqr <= 1.0 + 1e-12
        assert values.tkqr == pytest.approx(brute_force_tkqr(hits, k)[2], abs=1e-9)

    @given(hit_sequences(), st.randoms(use_true_random=False))
    def test_shifting_a_hit_later_never_helps(self, case, rng):
        hits, k = case
        ones = [i for i, h in enumerate(hits) if h == 1]
        zeros = [j for j, h in enumerate(hits) if h == 0]
        moves = [(i, j) for i in ones for j in zeros if j > i]
        if not moves:
            return
        i, j = rng.choice(moves)
        shifted = list(hits)
        shifted[i], shifted[j] = 0, 1
        before = compute_tkqr(HitSequence(tuple(hits), k=k)).tkqr
        after = compute_tkqr(HitSequence(tuple(shifted), k=k)).tkqr
        assert after <= before + 1e-12

    @given(st.integers(min_value=1, max_value=30))
    def test_discount_is_decreasing(self, i):
        assert turn_discount(i + 1) < turn_discount(i)


class TestValidation:
    def test_more_hits_than_requirements_rejected(self):
        with pytest.raises(ValueError):
            HitSequence((1, 1), k=1)

    def test_non_binary_hits_rejected(self):
        with pytest.raises(ValueError):
            HitSequence((2, 0), k=3)

    def test_k_must_be_positive(self):
        with pytest.raises(ValueError):
            HitSequence((), k=0)
