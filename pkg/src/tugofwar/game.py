"""Monte Carlo play of the epsilon tug-of-war game on a grid.

Game states are grid nodes.  At each non-terminal state the running payoff
is collected, then a fair coin decides which player moves; the winner's
strategy picks the next node among the neighbours.  The game stops on an
absorbing (Dirichlet) node with final payoff 0.

Coin tosses come from a counter-based Philox stream keyed by
``(seed, episode)``, one raw bit per toss, so any episode can be replayed
independently of the others.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _csv
from .dpp import CHAIN_1D, Grid, RunningPayoff, ValueFunction, payoff_vector

PLAYER_I = "I"
PLAYER_II = "II"

DEFAULT_MAX_STEPS = 10**6


class StrategyError(ValueError):
    pass


@dataclass(frozen=True)
class Strategy:
    """A stationary strategy: node index -> next node index.

    ``move`` optionally gives the same rule on continuous positions.
    """

    name: str
    select: Callable[[Grid, int], int]
    move: Callable[[float], float] | None = None

    def table(self, grid: Grid) -> np.ndarray:
        return np.array([self.select(grid, i) for i in range(grid.n_nodes)], dtype=np.intp)


@dataclass(frozen=True)
class _TableStrategy(Strategy):
    next_node: np.ndarray = field(default=None, repr=False)

    def table(self, grid: Grid) -> np.ndarray:
        return self.next_node


@dataclass
class GameTrace:
    states: list
    tosses: list
    increments: list
    payoff_accumulated: float
    terminated: bool
    steps: int
    positions: np.ndarray | None = None

    @property
    def truncated(self) -> bool:
        return not self.terminated

    def to_csv(self, path=None) -> str:
        dim = self.positions.shape[1]
        cols = ["step", "x"] + (["y"] if dim == 2 else []) + ["toss", "payoff_increment"]
        rows = []
        for k, node in enumerate(self.states):
            toss = self.tosses[k] if k < len(self.tosses) else ""
            inc = self.increments[k] if k < len(self.increments) else 0.0
            rows.append((k, *self.positions[node], toss, inc))
        if path is None:
            return _csv.render(cols, rows)
        return _csv.write(path, cols, rows)


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    std_error: float
    episodes: int
    truncated_episodes: int
    warning: str = ""

    def to_csv(self, path=None) -> str:
        cols = ["mean", "std_error", "episodes", "truncated"]
        rows = [(self.mean, self.std_error, self.episodes, self.truncated_episodes)]
        if path is None:
            return _csv.render(cols, rows)
        return _csv.write(path, cols, rows)


# -- strategies ----------------------------------------------------------------
def optimal_strategy_1d(player: str, grid: Grid) -> Strategy:
    """Player I jumps eps away from the Dirichlet end, Player II towards it."""
    if grid.mode != CHAIN_1D:
        raise StrategyError("optimal_strategy_1d needs a chain_1d grid")
    n = grid.n_nodes - 1
    a, b = grid.domain.a, grid.domain.b
    eps = grid.eps
    forward = grid.nodes[-1, 0] > grid.nodes[0, 0]
    if player == PLAYER_I:
        def select(_grid, k):
            return min(k + 1, n)
        step = eps if forward else -eps
    elif player == PLAYER_II:
        def select(_grid, k):
            return max(k - 1, 0)
        step = -eps if forward else eps
    else:
        raise StrategyError(f"unknown player {player!r}")

    def move(x):
        return float(min(max(x + step, a), b))

    return Strategy(f"optimal_1d_{player}", select, move)


def greedy_strategy(value: ValueFunction, player: str) -> Strategy:
    """Move to an argmax (Player I) or argmin (Player II) of the value.

    Ties go to the lowest node index.
    """
    grid = value.grid
    table = grid.table  # rows are sorted neighbour lists, padding after
    vals = value.values[table]
    if player == PLAYER_I:
        col = vals.argmax(axis=1)
    elif player == PLAYER_II:
        col = vals.argmin(axis=1)
    else:
        raise StrategyError(f"unknown player {player!r}")
    nxt = table[np.arange(grid.n_nodes), col]

    def select(_grid, k):
        return int(nxt[k])

    return _TableStrategy(f"greedy_{player}", select, None, nxt)


# -- coin ------------------------------------------------------------------------
class _CoinStream:
    """Fair coin tosses, one raw bit each, from Philox keyed by (seed, episode)."""

    def __init__(self, seed: int, episode: int, chunk_words: int = 64):
        ss = np.random.SeedSequence(int(seed), spawn_key=(int(episode),))
        self._bitgen = np.random.Philox(ss)
        self._chunk = chunk_words
        self._bits: list = []
        self._pos = 0

    def _refill(self):
        raw = np.asarray(self._bitgen.random_raw(self._chunk), dtype=np.uint64)
        self._bits = np.unpackbits(raw.view(np.uint8), bitorder="little").tolist()
        self._pos = 0

    def draw(self) -> int:
        if self._pos >= len(self._bits):
            self._refill()
        bit = self._bits[self._pos]
        self._pos += 1
        return bit

    def draw_many(self, n: int) -> np.ndarray:
        return np.array([self.draw() for _ in range(n)], dtype=np.uint8)


def coin_tosses(seed: int, episode: int, n: int) -> np.ndarray:
    """The first ``n`` tosses of an episode; 1 means Player I wins the toss."""
    return _CoinStream(seed, episode).draw_many(n)


# -- play ------------------------------------------------------------------------
def _resolve_start(grid: Grid, x0) -> int:
    if isinstance(x0, (int, np.integer)):
        if not 0 <= x0 < grid.n_nodes:
            raise ValueError(f"start node {x0} out of range")
        return int(x0)
    return int(grid.nearest_node(x0)[0])


def _play(next_I, next_II, f, absorbing, start, coin, max_steps, record):
    x = start
    total = 0.0
    steps = 0
    states, tosses, increments = [x], [], []
    while not absorbing[x]:
        if steps >= max_steps:
            return total, False, steps, states, tosses, increments
        total += f[x]
        toss = coin.draw()
        x = next_I[x] if toss else next_II[x]
        steps += 1
        if record:
            increments.append(f[states[-1]])
            tosses.append(toss)
            states.append(x)
    return total, True, steps, states, tosses, increments


def _check_moves(grid: Grid, table: np.ndarray, name: str):
    for i, j in enumerate(table):
        if j not in grid.neighbors[i]:
            raise StrategyError(f"strategy {name} leaves the eps-ball at node {i}")


def play_episode(
    grid: Grid,
    payoff: RunningPayoff,
    sI: Strategy,
    sII: Strategy,
    x0,
    rng_seed: int,
    max_steps: int = DEFAULT_MAX_STEPS,
    episode: int = 0,
) -> GameTrace:
    """Play one game from ``x0`` (a node index or a point) and record it."""
    if max_steps < 1:
        raise ValueError("max_steps must be at least 1")
    start = _resolve_start(grid, x0)
    tI, tII = sI.table(grid), sII.table(grid)
    _check_moves(grid, tI, sI.name)
    _check_moves(grid, tII, sII.name)
    f = payoff_vector(grid, payoff)
    total, term, steps, states, tosses, inc = _play(
        tI, tII, f, grid.dirichlet_mask, start, _CoinStream(rng_seed, episode), max_steps, True
    )
    return GameTrace(states, tosses, inc, total, term, steps, grid.nodes)


def _episode_payoffs(tI, tII, f, absorbing, start, seed, indices, max_steps):
    out = np.empty(len(indices))
    trunc = np.zeros(len(indices), dtype=bool)
    tI, tII = tI.tolist(), tII.tolist()
    f, absorbing = f.tolist(), absorbing.tolist()
    for j, i in enumerate(indices):
        total, term, *_ = _play(tI, tII, f, absorbing, start, _CoinStream(seed, i), max_steps, False)
        out[j] = total
        trunc[j] = not term
    return out, trunc


def estimate_value(
    grid: Grid,
    payoff: RunningPayoff,
    sI: Strategy,
    sII: Strategy,
    x0,
    episodes: int,
    rng_seed: int,
    max_steps: int = DEFAULT_MAX_STEPS,
    n_jobs: int = 1,
) -> MCEstimate:
    """Sample mean and standard error of the payoff over independent games.

    Episode ``i`` uses the coin stream keyed by ``(rng_seed, i)``, so the
    result does not depend on ``n_jobs``.  Truncated episodes contribute
    their partial payoff and are counted in ``truncated_episodes``.
    """
    if episodes < 1:
        raise ValueError("episodes must be at least 1")
    start = _resolve_start(grid, x0)
    if grid.dirichlet_mask[start]:
        return MCEstimate(0.0, 0.0, episodes, 0)
    tI, tII = sI.table(grid), sII.table(grid)
    _check_moves(grid, tI, sI.name)
    _check_moves(grid, tII, sII.name)
    f = payoff_vector(grid, payoff)
    idx = np.arange(episodes)
    if n_jobs == 1 or episodes < 2 * max(n_jobs, 1):
        payoffs, trunc = _episode_payoffs(tI, tII, f, grid.dirichlet_mask, start, rng_seed, idx, max_steps)
    else:
        from joblib import Parallel, delayed

        chunks = np.array_split(idx, n_jobs)
        parts = Parallel(n_jobs=n_jobs)(
            delayed(_episode_payoffs)(tI, tII, f, grid.dirichlet_mask, start, rng_seed, c, max_steps)
            for c in chunks
        )
        payoffs = np.concatenate([p for p, _ in parts])
        trunc = np.concatenate([t for _, t in parts])
    n_trunc = int(trunc.sum())
    warning = ""
    if episodes == 1:
        std_error = 0.0
        warning = "single_episode"
    else:
        std_error = float(payoffs.std(ddof=1) / np.sqrt(episodes))
    if n_trunc == episodes:
        warning = "all_truncated"
    return MCEstimate(float(payoffs.mean()), std_error, episodes, n_trunc, warning)
