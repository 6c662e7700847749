import numpy as np
import pytest
from hypothesis import given, strategies as st

from locgame import ArityError, CostModel, DeviationWitness, payoff, solve_n
from locgame.oracle import (
    best_response_exact,
    falsify_on_grid,
    is_equilibrium_exact,
    realize_witness,
)

from conftest import SIX_REFS, SIX_XSTAR

profiles = st.integers(min_value=1, max_value=7).flatmap(
    lambda n: st.tuples(
        st.lists(st.floats(0.0, 1.0, allow_nan=False), min_size=n, max_size=n),
        st.lists(st.floats(0.0, 1.0, allow_nan=False), min_size=n, max_size=n),
    ))


def random_game(rng, steep=True):
    n = int(rng.integers(1, 8))
    x = rng.random(n)
    if rng.random() < 0.25 and n > 1:
        x[1] = x[0]
    r = rng.random(n)
    if steep:
        cost = CostModel.quadratic(float(rng.uniform(0.3, 30)))
    else:
        cost = CostModel.quadratic(float(rng.uniform(0.01, 0.2)))
    return x.tolist(), r.tolist(), cost


class TestBestResponse:
    def test_duopoly_player_one(self):
        br = best_response_exact(0, (0.25, 0.75), (0.0, 1.0), CostModel.quadratic(1))
        assert br.value == pytest.approx(0.4375, abs=1e-15)
        assert br.attained and br.argmax == pytest.approx(0.25)

    def test_six_player_third(self):
        br = best_response_exact(2, SIX_XSTAR, SIX_REFS, CostModel.quadratic(5))
        assert br.value == pytest.approx(0.19, abs=1e-12)
        assert br.attained and br.argmax == pytest.approx(0.42)

    def test_single_player(self):
        br = best_response_exact(0, (0.9,), (0.3,), CostModel.quadratic(4))
        assert (br.value, br.argmax, br.attained) == (1.0, 0.3, True)

    def test_supremum_can_be_unattained(self):
        # Just right of the pair at 0.3 the third player would serve all of (0.3, 1].
        br = best_response_exact(2, (0.3, 0.3, 0.9), (0.3, 0.3, 0.2), CostModel.quadratic(0.5))
        assert not br.attained and br.side == "+" and br.argmax == pytest.approx(0.3)
        assert br.value == pytest.approx(0.7 - 0.5 * 0.01)

    def test_arity(self):
        with pytest.raises(ArityError):
            best_response_exact(0, (0.1, 0.2), (0.1,), CostModel.quadratic(1))

    def test_index(self):
        with pytest.raises(IndexError):
            best_response_exact(3, (0.1, 0.2), (0.1, 0.2), CostModel.quadratic(1))

    def test_value_beats_random_probes(self):
        rng = np.random.default_rng(4)
        for _ in range(40):
            x, r, cost = random_game(rng)
            i = int(rng.integers(len(x)))
            br = best_response_exact(i, x, r, cost)
            probes = np.concatenate([rng.random(1000), [0.0, 1.0], x])
            best = -np.inf
            for y in probes:
                moved = list(x)
                moved[i] = float(y)
                best = max(best, payoff(moved, r, cost)[i])
            assert best <= br.value + 1e-9

    @given(profiles, st.floats(0.05, 40.0))
    def test_value_at_least_current(self, xr, c):
        x, r = xr
        cost = CostModel.quadratic(c)
        g = payoff(x, r, cost)
        for i in range(len(x)):
            assert best_response_exact(i, x, r, cost).value >= g[i] - 1e-12

    @given(profiles, st.floats(0.05, 40.0), st.data())
    def test_removing_an_opponent_never_hurts(self, xr, c, data):
        x, r = xr
        if len(x) < 2:
            return
        cost = CostModel.quadratic(c)
        i = data.draw(st.integers(0, len(x) - 1))
        k = data.draw(st.integers(0, len(x) - 1).filter(lambda v: v != i))
        full = best_response_exact(i, x, r, cost).value
        keep = [j for j in range(len(x)) if j != k]
        fewer = best_response_exact(keep.index(i), [x[j] for j in keep], [r[j] for j in keep], cost).value
        assert fewer >= full - 1e-12


class TestEquilibriumCheck:
    def test_meeting_point_example(self):
        assert is_equilibrium_exact((0.5, 0.5), (0.42, 0.45), CostModel.quadratic(3), 1e-9) == (True, None)

    def test_meeting_point_failure(self):
        ok, w = is_equilibrium_exact((0.5, 0.5), (0.1, 0.2), CostModel.quadratic(1), 1e-9)
        assert not ok
        assert w.player == 0 and w.target < 0.5 and w.gain > 0

    def test_six_player_equilibrium(self):
        assert is_equilibrium_exact(SIX_XSTAR, SIX_REFS, CostModel.quadratic(5))[0]

    def test_negative_tolerance(self):
        with pytest.raises(ValueError):
            is_equilibrium_exact((0.5,), (0.5,), CostModel.quadratic(1), -1.0)

    def test_unattained_gain_within_tolerance_is_accepted(self):
        # A tiny limit gain just past a neighbour is tolerated up to tol.
        cost = CostModel.quadratic(1)
        x, r = (0.25, 0.75), (0.0, 1.0)
        assert is_equilibrium_exact(x, r, cost, tol=1e-9)[0]

    def test_witness_gain_matches_payoff(self):
        rng = np.random.default_rng(8)
        for _ in range(200):
            x, r, cost = random_game(rng)
            ok, w = is_equilibrium_exact(x, r, cost)
            if ok:
                continue
            loc, gain = realize_witness(x, r, cost, w)
            assert gain > 0
            if w.side is None:
                assert gain == pytest.approx(w.gain, abs=1e-12)

    def test_witness_ties_pick_lowest_player(self):
        cost = CostModel.quadratic(1)
        ok, w = is_equilibrium_exact((0.5, 0.5), (0.1, 0.9), cost)
        assert not ok and w.player == 0


class TestGridFalsifier:
    def test_certified_duopoly(self):
        assert falsify_on_grid((0.25, 0.75), (0.0, 1.0), CostModel.quadratic(1), 2001) is None

    def test_non_equilibrium(self):
        w = falsify_on_grid((0.5, 0.5), (0.1, 0.2), CostModel.quadratic(1), 2001)
        assert isinstance(w, DeviationWitness) and w.gain > 1 / 2001

    def test_single_player(self):
        assert falsify_on_grid((0.4,), (0.4,), CostModel.quadratic(1), 11) is None

    def test_grid_size(self):
        with pytest.raises(ValueError):
            falsify_on_grid((0.4,), (0.4,), CostModel.quadratic(1), 1)

    def test_grid_hits_imply_exact_failure(self):
        rng = np.random.default_rng(12)
        for _ in range(10000):
            x, r, cost = random_game(rng)
            if falsify_on_grid(x, r, cost, 257) is not None:
                assert not is_equilibrium_exact(x, r, cost)[0]

    def test_large_exact_gains_are_seen_on_grid_gentle_costs(self):
        grid = 257
        rng = np.random.default_rng(13)
        for _ in range(10000):
            x, r, cost = random_game(rng, steep=False)
            ok, w = is_equilibrium_exact(x, r, cost)
            if not ok and w.gain > 2 / grid:
                assert falsify_on_grid(x, r, cost, grid) is not None, (x, r, cost)

    def test_large_exact_gains_are_seen_on_grid(self):
        # The nearest grid point to a limit target lies up to one spacing away,
        # where the payoff is lower by at most (1/2 + max gamma') per unit.
        grid = 257
        rng = np.random.default_rng(14)
        for _ in range(3000):
            x, r, cost = random_game(rng)
            ok, w = is_equilibrium_exact(x, r, cost)
            slope = 0.5 + float(cost.marginal(1.0))
            if not ok and w.gain > 2 / grid + slope / (grid - 1):
                assert falsify_on_grid(x, r, cost, grid) is not None, (x, r, cost)

    def test_certified_equilibria_survive_the_grid(self):
        rng = np.random.default_rng(15)
        for _ in range(300):
            n = int(rng.integers(2, 8))
            r = rng.random(n).tolist()
            cost = CostModel.quadratic(float(rng.uniform(0.3, 30)))
            out = solve_n(r, cost)
            if out.exists:
                assert falsify_on_grid(out.x_star, r, cost, 1001) is None
