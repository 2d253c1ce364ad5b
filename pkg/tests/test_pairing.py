"""Pairing-strategy tests: N-F, NN-FF, exhaustive enumeration, power assignment."""

import numpy as np
import pytest

from uavnoma import (
    FixedPower,
    Pairing,
    PairingStrategy,
    assign_power,
    build_pairing,
    enumerate_pairings,
    pair_near_far,
    pair_near_near,
    random_pairing,
    rank_by_gain,
)


def double_factorial(n):
    """Independent matching counter: (n-1)!! perfect matchings of n items."""
    return 1 if n <= 1 else n * double_factorial(n - 2)


class TestNearFar:
    def test_four_users(self):
        assert pair_near_far([4.0, 3.0, 2.0, 1.0]).pairs == ((0, 3), (1, 2))

    def test_two_users(self):
        assert pair_near_far([2.0, 1.0]).pairs == ((0, 1),)

    def test_six_users(self):
        assert pair_near_far([6, 5, 4, 3, 2, 1]).pairs == ((0, 5), (1, 4), (2, 3))

    def test_odd_count_rejected(self):
        with pytest.raises(ValueError):
            pair_near_far([3.0, 2.0, 1.0])

    def test_unsorted_rejected(self):
        with pytest.raises(ValueError):
            pair_near_far([1.0, 2.0])


class TestNearNear:
    def test_four_users(self):
        assert pair_near_near([4.0, 3.0, 2.0, 1.0]).pairs == ((0, 1), (2, 3))

    def test_two_users(self):
        assert pair_near_near([2.0, 1.0]).pairs == ((0, 1),)

    def test_six_users(self):
        assert pair_near_near([6, 5, 4, 3, 2, 1]).pairs == ((0, 1), (2, 3), (4, 5))

    def test_odd_count_rejected(self):
        with pytest.raises(ValueError):
            pair_near_near([3.0, 2.0, 1.0])


class TestEnumeratePairings:
    @pytest.mark.parametrize("n", [2, 4, 6, 8])
    def test_count_matches_double_factorial(self, n):
        assert len(enumerate_pairings(n)) == double_factorial(n - 1)

    def test_four_users_lists_all_three_groupings(self):
        got = {p.pairs for p in enumerate_pairings(4)}
        assert got == {((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2))}

    def test_no_duplicates(self):
        pairings = enumerate_pairings(6)
        canonical = {tuple(sorted(p.pairs)) for p in pairings}
        assert len(canonical) == len(pairings)

    def test_odd_rejected(self):
        with pytest.raises(ValueError):
            enumerate_pairings(5)

    @pytest.mark.parametrize("n", [2, 4, 6])
    def test_strategies_are_members(self, n):
        gains = list(range(n, 0, -1))
        members = {p.pairs for p in enumerate_pairings(n)}
        assert pair_near_far(gains).pairs in members
        assert pair_near_near(gains).pairs in members


class TestPairingPartition:
    def test_every_strategy_partitions_random_gains(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            n = int(rng.choice([2, 4, 6]))
            gains = rng.exponential(size=n)
            for strategy in (PairingStrategy.NEAR_FAR, PairingStrategy.NEAR_NEAR,
                             PairingStrategy.RANDOM):
                pairing = build_pairing(strategy, gains, rng)
                assert sorted(pairing.indices()) == list(range(n))
                for strong, weak in pairing.pairs:
                    assert gains[strong] >= gains[weak]

    def test_depends_only_on_gain_order(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            gains = rng.exponential(size=6)
            transformed = np.exp(3.0 * gains) + 1.0  # strictly increasing map
            for strategy in (PairingStrategy.NEAR_FAR, PairingStrategy.NEAR_NEAR):
                assert (build_pairing(strategy, gains).pairs
                        == build_pairing(strategy, transformed).pairs)

    def test_duplicate_index_rejected(self):
        with pytest.raises(ValueError):
            Pairing(((0, 1), (1, 2)))

    def test_random_pairing_covers_all_patterns(self):
        rng = np.random.default_rng(5)
        seen = {random_pairing(4, rng).pairs for _ in range(200)}
        assert len(seen) == 3

    def test_rank_by_gain_stable_ties(self):
        assert list(rank_by_gain([1.0, 2.0, 1.0, 2.0])) == [1, 3, 0, 2]

    def test_equal_gains_pair_by_index(self):
        pairing = build_pairing(PairingStrategy.NEAR_FAR, [1.0, 1.0, 1.0, 1.0])
        assert pairing.pairs == ((0, 3), (1, 2))


class TestAssignPower:
    def test_fixed_pass_through(self):
        split = assign_power((2.0, 0.5), FixedPower(0.25, 0.75))
        assert split.coefficients == (0.25, 0.75)

    def test_equal_split_rejected(self):
        with pytest.raises(ValueError, match="strictly increasing"):
            assign_power((2.0, 0.5), FixedPower(0.5, 0.5))

    def test_non_unit_sum_rejected(self):
        with pytest.raises(ValueError, match="sum to 1"):
            assign_power((2.0, 0.5), FixedPower(0.3, 0.3))

    def test_inverted_ordering_rejected(self):
        with pytest.raises(ValueError, match="strictly increasing"):
            assign_power((2.0, 0.5), FixedPower(0.75, 0.25))

    def test_tie_breaks_stably(self):
        results = {assign_power((1.0, 1.0), FixedPower(0.25, 0.75)).coefficients
                   for _ in range(20)}
        assert results == {(0.25, 0.75)}

    def test_unordered_gains_rejected(self):
        with pytest.raises(ValueError, match="strong-first"):
            assign_power((0.5, 2.0), FixedPower(0.25, 0.75))
