import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from locgame import (
    ArityError,
    CostModel,
    InvalidCostError,
    Profile,
    UnsupportedConfigurationError,
    compute_delta,
    neighborhood,
    partition,
    payoff,
)

from conftest import SIX_REFS, SIX_XSTAR

positions = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)
profiles = st.lists(positions, min_size=1, max_size=10)


def nearest_count(x, samples=10**6):
    """Clientele by counting sample points of [0, 1] closest to each location."""
    x = np.asarray(x, dtype=float)
    t = (np.arange(samples) + 0.5) / samples
    locs, inverse = np.unique(x, return_inverse=True)
    k = np.clip(np.searchsorted(locs, t), 1, len(locs) - 1) if len(locs) > 1 else np.zeros(samples, int)
    if len(locs) > 1:
        left_closer = np.abs(t - locs[k - 1]) <= np.abs(locs[k] - t)
        k = np.where(left_closer, k - 1, k)
    share = np.bincount(k, minlength=len(locs)) / samples
    occ = np.bincount(inverse, minlength=len(locs))
    return share[inverse] / occ[inverse]


class TestPartition:
    def test_paired_at_half(self):
        assert partition((0.5, 0.5)).q == (0.5, 0.5)

    def test_symmetric_pair(self):
        assert partition((0.25, 0.75)).q == (0.5, 0.5)

    def test_six_player_profile(self):
        part = partition(SIX_XSTAR)
        np.testing.assert_allclose(part.q, (0.14, 0.14, 0.19, 0.165, 0.19, 0.175), atol=1e-15)
        np.testing.assert_allclose(part.boundaries, (0.0, 0.28, 0.47, 0.635, 0.825, 1.0), atol=1e-15)
        assert part.occupancy == (2, 1, 1, 1, 1)

    def test_six_player_profile_matches_sample_count(self):
        np.testing.assert_allclose(partition(SIX_XSTAR).q, nearest_count(SIX_XSTAR), atol=2e-6)

    def test_end_segments_are_not_halved(self):
        part = partition((0.2, 0.6))
        assert part.q == pytest.approx((0.4, 0.6))
        assert part.q_left == pytest.approx((0.2, 0.2))

    def test_single_player_owns_everything(self):
        assert partition((0.3,)).q == (1.0,)

    def test_unsorted_input_keeps_identities(self):
        part = partition((0.9, 0.1, 0.5))
        assert part.q == pytest.approx((0.3, 0.3, 0.4))

    def test_three_way_colocation_splits_equally(self):
        assert partition((0.4, 0.4, 0.4)).q == pytest.approx((1 / 3,) * 3)

    def test_near_duplicates_within_tolerance_are_merged(self):
        part = partition((0.5, 0.5 + 1e-13))
        assert part.occupancy == (2,)

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            partition((0.2, 1.2))

    def test_conservation_on_random_profiles(self):
        rng = np.random.default_rng(11)
        worst = 0.0
        for _ in range(20000):
            n = int(rng.integers(1, 11))
            x = rng.random(n)
            if rng.random() < 0.3:
                x = np.round(x, 1)
            worst = max(worst, abs(sum(partition(x).q) - 1.0))
        assert worst <= 1e-12

    @given(profiles)
    def test_split_and_occupancy(self, x):
        part = partition(x)
        for q, ql, qr in zip(part.q, part.q_left, part.q_right):
            assert q == pytest.approx(ql + qr, abs=1e-15)
            assert ql >= 0 and qr >= 0
        assert sum(part.occupancy) == len(x)
        assert all(o >= 1 for o in part.occupancy)
        assert abs(sum(part.q) - 1.0) <= 1e-12

    @given(profiles)
    def test_reflection_reverses_clientele(self, x):
        # Gaps at the co-location tolerance may round differently once reflected.
        gaps = np.diff(np.sort(x))
        assume(not np.any((gaps > 0) & (gaps < 1e-10)))
        q = partition(x).q
        q_ref = partition([1.0 - v for v in reversed(x)]).q
        assert q_ref == pytest.approx(tuple(reversed(q)), abs=1e-15)

    def test_discretization_agreement(self):
        rng = np.random.default_rng(3)
        checked = 0
        while checked < 8:
            x = rng.random(int(rng.integers(2, 9)))
            if np.min(np.diff(np.sort(x))) < 1e-3:
                continue
            np.testing.assert_allclose(partition(x).q, nearest_count(x), atol=2e-5)
            checked += 1


class TestPayoff:
    def test_at_reference_equals_clientele(self):
        x = (0.1, 0.35, 0.8)
        assert payoff(x, x, CostModel.quadratic(7)) == partition(x).q

    def test_six_player_first_payoff(self):
        g = payoff(SIX_XSTAR, SIX_REFS, CostModel.quadratic(5))
        assert g[0] == pytest.approx(0.14 - 5 * 0.04 ** 2, abs=1e-15)

    def test_duopoly_symmetric(self):
        g = payoff((0.25, 0.75), (0.0, 1.0), CostModel.quadratic(1))
        assert g == pytest.approx((0.4375, 0.4375), abs=1e-15)

    def test_heterogeneous_uses_own_coefficient(self):
        g = payoff((0.3, 0.7), (0.2, 0.9), CostModel.heterogeneous((1, 10)))
        assert g == pytest.approx((0.5 - 0.01, 0.5 - 10 * 0.04))

    def test_heterogeneous_needs_duopoly(self):
        with pytest.raises(UnsupportedConfigurationError):
            payoff((0.1, 0.2, 0.3), (0.1, 0.2, 0.3), CostModel.heterogeneous((1, 2, 3)))

    def test_arity_mismatch(self):
        with pytest.raises(ArityError):
            payoff((0.1, 0.2), (0.1,), CostModel.quadratic(1))

    @given(profiles, st.floats(min_value=0.05, max_value=50))
    def test_payoff_never_exceeds_clientele(self, x, c):
        r = [1.0 - v for v in x]
        for g, q in zip(payoff(x, r, CostModel.quadratic(c)), partition(x).q):
            assert g <= q + 1e-15


class TestNeighborhood:
    def test_paired_left_end(self):
        assert neighborhood(SIX_XSTAR, 0) == (0.0, 0.42, 2)
        assert neighborhood(SIX_XSTAR, 1) == (0.0, 0.42, 2)

    def test_pair_at_half(self):
        assert neighborhood((0.5, 0.5), 1) == (0.0, 1.0, 2)

    def test_right_end(self):
        assert neighborhood((0.25, 0.75), 1) == (0.25, 1.0, 1)


class TestDelta:
    def test_quadratic(self):
        assert compute_delta(CostModel.quadratic(5)) == pytest.approx(0.05)

    def test_quadratic_not_clamped(self):
        assert compute_delta(CostModel.quadratic(0.1)) == pytest.approx(2.5)

    def test_quartic_root(self):
        d = compute_delta(CostModel.power(4, 1.0))
        assert d == pytest.approx(0.5, abs=1e-10)

    def test_flat_cost_gives_infinity(self):
        assert compute_delta(CostModel.power(2, 0.1)) == math.inf

    def test_steep_start_gives_zero(self):
        cost = CostModel.general(lambda d: d + d * d, lambda d: 1 + 2 * d, label="steep")
        assert compute_delta(cost) == 0.0

    def test_heterogeneous_per_player(self):
        cost = CostModel.heterogeneous((1, 10))
        assert (cost.delta(0), cost.delta(1)) == pytest.approx((0.25, 0.025))

    @given(st.floats(min_value=1e-3, max_value=1e3), st.floats(min_value=1.001, max_value=2.0))
    def test_quadratic_decreasing(self, c, factor):
        assert compute_delta(CostModel.quadratic(c * factor)) < compute_delta(CostModel.quadratic(c))

    @given(st.floats(min_value=1.2, max_value=6.0), st.floats(min_value=0.3, max_value=20.0))
    def test_interior_root_solves_first_order_condition(self, p, a):
        cost = CostModel.power(p, a)
        d = compute_delta(cost)
        if 0 < d < 1:
            assert abs(float(cost.marginal(d)) - 0.5) <= 1e-10


class TestCostValidation:
    @pytest.mark.parametrize("c", [0, -1, math.inf, math.nan])
    def test_quadratic_needs_positive(self, c):
        with pytest.raises(InvalidCostError):
            CostModel.quadratic(c)

    def test_general_needs_zero_at_origin(self):
        with pytest.raises(InvalidCostError):
            CostModel.general(lambda d: 1 + d * d, lambda d: 2 * d)

    def test_general_needs_convexity(self):
        with pytest.raises(InvalidCostError):
            CostModel.general(lambda d: np.sqrt(d), lambda d: 0.5 / np.sqrt(d + 1e-9))

    def test_power_exponent(self):
        with pytest.raises(InvalidCostError):
            CostModel.power(1.0, 1.0)

    def test_scalar_only_callables_are_vectorized(self):
        cost = CostModel.general(lambda d: 3.0 * d ** 2 if isinstance(d, float) else float("nan"),
                                 lambda d: 6.0 * d if isinstance(d, float) else float("nan"))
        assert compute_delta(cost) == pytest.approx(1 / 12)


class TestProfile:
    def test_perm_recovers_input(self):
        prof = Profile.of((0.7, 0.2, 0.2, 0.9))
        assert prof.perm == (1, 2, 0, 3)
        assert prof.to_input_order(prof.sorted_values) == prof.values

    def test_empty_rejected(self):
        with pytest.raises(ArityError):
            Profile.of(())
