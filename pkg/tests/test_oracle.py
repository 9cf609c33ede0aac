from fractions import Fraction

import numpy as np
import pytest

from stubborn_usd.coupling import config_geq
from stubborn_usd.core import Configuration
from stubborn_usd.oracle import compare_monte_carlo, configurations, solve_chain

from oracles import exact_win1

W = 4 / 9  # exact Opinion-1 win probability of (1,2,0) at p = 1/2, from fraction elimination


def test_hand_derived_value():
    assert float(exact_win1(3, Fraction(1, 2))[(1, 2, 0)]) == W
    assert solve_chain(3, 0.5).win1(Configuration(1, 2, 0)) == pytest.approx(W, abs=1e-9)


@pytest.mark.parametrize("n,p", [(4, Fraction(0)), (5, Fraction(3, 10)), (6, Fraction(1))])
def test_matches_fraction_elimination(n, p):
    ref = exact_win1(n, p)
    sol = solve_chain(n, float(p))
    for (a, b, u), value in ref.items():
        assert sol.win1(Configuration(a, b, u)) == pytest.approx(float(value), abs=1e-12)


def test_two_agents_symmetric():
    assert solve_chain(2, 0.0).win1(Configuration(1, 1, 0)) == pytest.approx(0.5)


def test_state_enumeration():
    states = configurations(6)
    assert len(states) == 28 == len(set(states))
    assert states[0] == Configuration(6, 0, 0) and states[-1] == Configuration(0, 0, 6)


def test_boundaries_and_sums():
    n = 9
    sol = solve_chain(n, 0.35)
    assert sol.win1(Configuration(n, 0, 0)) == 1 and sol.win2(Configuration(0, n, 0)) == 1
    assert sol.win1(Configuration(0, 0, n)) == 0 and sol.win2(Configuration(0, 0, n)) == 0
    assert sol.exp_time(Configuration(0, 0, n)) is None
    for c in sol.states:
        total = sol.win1(c) + sol.win2(c)
        if not c.is_frozen:
            assert total == pytest.approx(1.0, abs=1e-10)
            assert sol.exp_time(c) is not None and sol.exp_time(c) >= 0
        if c.x2 == 0 and c.x1 >= 1:
            assert sol.win1(c) == pytest.approx(1.0, abs=1e-12)


def test_exp_time_two_agents():
    # (1,1,0) at p=0: geometric(1/2) to (.,.,1), then geometric(1/4) to absorption
    assert solve_chain(2, 0.0).exp_time(Configuration(1, 1, 0)) == pytest.approx(2 + 4)


@pytest.mark.parametrize("n", [5, 20, 40])
def test_residual(n):
    assert solve_chain(n, 0.37).residual <= 1e-10


def test_cap():
    with pytest.raises(ValueError):
        solve_chain(61, 0.5)
    with pytest.raises(ValueError):
        solve_chain(1, 0.5)
    sol = solve_chain(4, 0.5)
    with pytest.raises(ValueError):
        sol.win1(Configuration(2, 2, 1))


def test_opinion_swap_symmetry():
    sol = solve_chain(10, 0.0)
    for c in sol.states:
        assert sol.win1(c) == pytest.approx(sol.win2(c.mirrored()), abs=1e-12)


@pytest.mark.parametrize("n", [6, 11, 14])
def test_monotone_in_order_and_p(n):
    grid = [k / 10 for k in range(11)]
    sols = [solve_chain(n, p) for p in grid]
    for sol in sols:
        v = {c: sol.win1(c) for c in sol.states}
        for c in sol.states:
            for d in sol.states:
                if config_geq(c, d):
                    assert v[c] >= v[d] - 1e-9
    for lo, hi in zip(sols, sols[1:]):
        assert np.all(hi.win1_values >= lo.win1_values - 1e-9)


def test_crosses_half_near_threshold():
    # (4,6,2): threshold 1/3
    vals = [solve_chain(12, p).win1(Configuration(4, 6, 2)) for p in (0.1, 1 / 3, 0.6)]
    assert vals[0] < 0.5 < vals[2]


def test_compare_monte_carlo():
    sol = solve_chain(8, 0.4)
    rep = compare_monte_carlo(sol, Configuration(3, 4, 1), 20000, seed=3)
    assert abs(rep.z_score) < 5 and rep.exact == sol.win1(Configuration(3, 4, 1))
    sure = compare_monte_carlo(sol, Configuration(5, 0, 3), 50, seed=1)
    assert (sure.z_score, sure.empirical, sure.exact) == (0.0, 1.0, pytest.approx(1.0))
