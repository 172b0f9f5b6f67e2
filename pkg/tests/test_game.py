import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tugofwar import (
    Domain,
    PLAYER_I,
    PLAYER_II,
    RunningPayoff,
    build_grid,
    coin_tosses,
    estimate_value,
    greedy_strategy,
    optimal_strategy_1d,
    play_episode,
    solve_dpp,
)
from tugofwar.dpp import payoff_vector
from tugofwar.game import Strategy, StrategyError


@pytest.fixture(scope="module")
def chain(unit_interval):
    return build_grid(unit_interval, 0.1)


@pytest.fixture(scope="module")
def optimal(chain):
    return optimal_strategy_1d(PLAYER_I, chain), optimal_strategy_1d(PLAYER_II, chain)


def test_optimal_strategy_moves(chain, optimal):
    sI, sII = optimal
    assert sI.table(chain).tolist() == list(range(1, 11)) + [10]
    assert sII.table(chain).tolist() == [0] + list(range(0, 10))
    assert sI.move(0.95) == 1.0 and sII.move(0.05) == 0.0
    assert sI.move(0.5) == pytest.approx(0.6)


def test_optimal_strategy_rejects_lattice(small_disk_grid):
    with pytest.raises(StrategyError):
        optimal_strategy_1d(PLAYER_I, small_disk_grid)
    with pytest.raises(StrategyError):
        optimal_strategy_1d("III", build_grid(Domain.interval(), 0.5))


def test_coin_is_fair_and_reproducible():
    bits = coin_tosses(12345, 0, 100000)
    assert abs(bits.mean() - 0.5) < 0.01
    np.testing.assert_array_equal(bits, coin_tosses(12345, 0, 100000))
    assert not np.array_equal(bits[:256], coin_tosses(12345, 1, 256))


def test_trace_invariants(chain, optimal):
    p = RunningPayoff.strip_only(1.0, 0.1)
    f = payoff_vector(chain, p)
    tr = play_episode(chain, p, *optimal, 5, rng_seed=3)
    assert tr.terminated and chain.dirichlet_mask[tr.states[-1]]
    assert tr.steps == len(tr.tosses) == len(tr.states) - 1
    assert tr.payoff_accumulated == pytest.approx(sum(f[s] for s in tr.states[:-1]))
    x = chain.nodes[tr.states, 0]
    assert np.all(np.abs(np.diff(x)) <= 0.1 + 1e-12)
    lines = tr.to_csv().splitlines()
    assert lines[0] == "step,x,toss,payoff_increment"
    assert len(lines) == tr.steps + 2


def test_play_is_deterministic(chain, optimal):
    p = RunningPayoff.strip_only(1.0, 0.1)
    a = play_episode(chain, p, *optimal, 5, rng_seed=11, episode=4)
    b = play_episode(chain, p, *optimal, 5, rng_seed=11, episode=4)
    assert a.states == b.states and a.tosses == b.tosses


def test_truncation(chain, optimal):
    p = RunningPayoff.strip_only(1.0, 0.1)
    tr = play_episode(chain, p, *optimal, 9, rng_seed=0, max_steps=1)
    assert tr.truncated and tr.steps == 1
    est = estimate_value(chain, p, *optimal, 9, episodes=20, rng_seed=0, max_steps=1)
    assert est.truncated_episodes == 20 and est.warning == "all_truncated"


def test_start_on_dirichlet(chain, optimal):
    p = RunningPayoff.strip_only(1.0, 0.1)
    tr = play_episode(chain, p, *optimal, 0, rng_seed=0)
    assert tr.steps == 0 and tr.payoff_accumulated == 0.0 and tr.terminated
    est = estimate_value(chain, p, *optimal, 0, episodes=10, rng_seed=0)
    assert (est.mean, est.std_error) == (0.0, 0.0)


def test_single_episode_flag(chain, optimal):
    est = estimate_value(chain, RunningPayoff.strip_only(1.0, 0.1), *optimal, 5, episodes=1, rng_seed=0)
    assert est.std_error == 0.0 and est.warning == "single_episode"


def test_threads_do_not_change_result(chain, optimal):
    p = RunningPayoff.strip_only(1.0, 0.1)
    a = estimate_value(chain, p, *optimal, 5, episodes=400, rng_seed=9, n_jobs=1)
    b = estimate_value(chain, p, *optimal, 5, episodes=400, rng_seed=9, n_jobs=2)
    assert a.mean == pytest.approx(b.mean, rel=1e-14) and a.std_error == pytest.approx(b.std_error, rel=1e-12)


def test_std_error_definition(chain, optimal):
    p = RunningPayoff.strip_only(1.0, 0.1)
    payoffs = [play_episode(chain, p, *optimal, 5, rng_seed=2, episode=i).payoff_accumulated for i in range(50)]
    est = estimate_value(chain, p, *optimal, 5, episodes=50, rng_seed=2)
    assert est.mean == pytest.approx(np.mean(payoffs))
    assert est.std_error == pytest.approx(np.std(payoffs, ddof=1) / np.sqrt(50))
    assert est.to_csv().splitlines()[0] == "mean,std_error,episodes,truncated"


def test_illegal_strategy_rejected(chain, optimal):
    jump = Strategy("jump", lambda g, k: min(k + 2, 10))
    with pytest.raises(StrategyError):
        play_episode(chain, RunningPayoff.strip_only(1.0, 0.1), jump, optimal[1], 5, rng_seed=0)


def test_greedy_matches_dpp_value_1d(chain):
    p = RunningPayoff.full_payoff(1.0, 0.1)
    u = solve_dpp(chain, p)
    sI, sII = greedy_strategy(u, PLAYER_I), greedy_strategy(u, PLAYER_II)
    est = estimate_value(chain, p, sI, sII, 4, episodes=10000, rng_seed=77)
    assert abs(est.mean - u.values[4]) <= 3 * est.std_error


def test_greedy_2d_stays_in_ball(small_disk_grid):
    p = RunningPayoff.running(1.0, 0.2)
    u = solve_dpp(small_disk_grid, p)
    sI, sII = greedy_strategy(u, PLAYER_I), greedy_strategy(u, PLAYER_II)
    start = int(small_disk_grid.nearest_node((0.0, 0.3))[0])
    tr = play_episode(small_disk_grid, p, sI, sII, start, rng_seed=5)
    pos = small_disk_grid.nodes[tr.states]
    assert np.all(np.linalg.norm(np.diff(pos, axis=0), axis=1) <= 0.2 + 1e-12)
    assert tr.to_csv().splitlines()[0] == "step,x,y,toss,payoff_increment"


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 9), st.integers(1, 10), st.integers(0, 2**63))
def test_coupled_paths_are_ordered(x, dy, seed):
    # same coin stream, shifted starts: ordered positions and payoffs
    grid = build_grid(Domain.interval(), 0.1)
    y = min(x + dy, 10)
    sI, sII = optimal_strategy_1d(PLAYER_I, grid), optimal_strategy_1d(PLAYER_II, grid)
    p = RunningPayoff.full_payoff(1.0, 0.1)
    a = play_episode(grid, p, sI, sII, x, rng_seed=seed, max_steps=10**5)
    b = play_episode(grid, p, sI, sII, y, rng_seed=seed, max_steps=10**5)
    n = min(len(a.states), len(b.states))
    assert all(sa <= sb for sa, sb in zip(a.states[:n], b.states[:n]))
    assert a.payoff_accumulated <= b.payoff_accumulated + 1e-15
