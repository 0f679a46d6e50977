"""Trajectories, beta-pursuit and stepwise strategies.

A strategy is called once per step with its own current position and the full
opponent prefix through the current step, and returns its next position. Only
the prefix it is handed may influence the answer, which is what makes it
beta-stepwise.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .metric_graph import TOL, _TIE, GraphPoint, InputDomainError, MetricGraph, dense_sample, walk_endpoints

__all__ = [
    "Trajectory",
    "Strategy",
    "StrategyProtocolError",
    "horizon_steps",
    "beta_pursuit_step",
    "beta_pursuit_curve",
    "GreedyPursuer",
    "greedy_pursuer",
    "Stationary",
    "FleeEvader",
    "ScriptedEvader",
    "RandomWalkEvader",
    "MaximinEvader",
    "make_evader",
    "EVADER_KINDS",
    "play_against_fixed",
]


class StrategyProtocolError(RuntimeError):
    """A strategy produced an inadmissible move."""

    def __init__(self, who: str, step: int, displacement: float, beta: float):
        super().__init__(f"{who} moved {displacement!r} > beta={beta!r} at step {step}")
        self.who = who
        self.step = step
        self.displacement = displacement


def horizon_steps(T: float, beta: float) -> int:
    """N = ceil(T / beta), ignoring round-off just above an integer."""
    if not (T > 0 and beta > 0):
        raise InputDomainError("T and beta must be positive")
    r = T / beta
    return max(1, math.ceil(r - 1e-9 * max(1.0, r)))


@dataclass
class Trajectory:
    graph: MetricGraph
    beta: float
    positions: list[GraphPoint] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.positions)

    def __getitem__(self, i):
        return self.positions[i]

    def steps(self) -> np.ndarray:
        g = self.graph
        return np.array([g.distance(a, b) for a, b in zip(self.positions, self.positions[1:])])

    def max_step(self) -> float:
        s = self.steps()
        return float(s.max()) if len(s) else 0.0

    def is_lipschitz(self, tol: float = TOL) -> bool:
        return self.max_step() <= self.beta + tol

    def to_rows(self) -> list[tuple]:
        return [(i, i * self.beta, p.edge, p.offset) for i, p in enumerate(self.positions)]

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "time", "edge", "offset"])
            for i, t, e, o in self.to_rows():
                w.writerow([i, repr(t), e, repr(o)])

    @classmethod
    def from_csv(cls, path: str | Path, graph: MetricGraph, beta: float | None = None) -> "Trajectory":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        rows.sort(key=lambda r: int(r["step"]))
        pts = [graph.canonical(GraphPoint(int(r["edge"]), float(r["offset"]))) for r in rows]
        if beta is None:
            beta = float(rows[1]["time"]) - float(rows[0]["time"]) if len(rows) > 1 else 1.0
        return cls(graph, beta, pts)


class Strategy:
    """Base class: ``step(own, opponent_prefix) -> next own position``."""

    graph: MetricGraph
    beta: float
    name = "strategy"

    def reset(self) -> None:
        """Forget per-game state."""

    def step(self, own: GraphPoint, opponent_prefix: Sequence[GraphPoint]) -> GraphPoint:
        raise NotImplementedError


def beta_pursuit_step(graph: MetricGraph, L: GraphPoint, target: GraphPoint, beta: float) -> GraphPoint:
    """Jump onto ``target`` when within ``beta``, else move exactly ``beta`` along the geodesic toward it."""
    if not (beta > 0):
        raise InputDomainError("beta must be positive")
    return graph.step_toward(L, target, beta)


def beta_pursuit_curve(graph: MetricGraph, L0: GraphPoint, targets: Sequence[GraphPoint], beta: float) -> Trajectory:
    if not targets:
        raise InputDomainError("targets must be nonempty")
    pos = [graph.canonical(L0)]
    for t in targets:
        pos.append(beta_pursuit_step(graph, pos[-1], t, beta))
    return Trajectory(graph, beta, pos)


class GreedyPursuer(Strategy):
    name = "greedy"

    def __init__(self, graph: MetricGraph, beta: float):
        self.graph = graph
        self.beta = beta

    def step(self, own, opponent_prefix):
        return beta_pursuit_step(self.graph, own, opponent_prefix[-1], self.beta)


def greedy_pursuer(graph: MetricGraph, beta: float) -> GreedyPursuer:
    return GreedyPursuer(graph, beta)


class Stationary(Strategy):
    name = "stationary"

    def __init__(self, graph: MetricGraph, beta: float):
        self.graph = graph
        self.beta = beta

    def step(self, own, opponent_prefix):
        return own


def _argmax_far(graph: MetricGraph, cands: list[GraphPoint], ref: GraphPoint) -> GraphPoint:
    """Candidate farthest from ``ref``; near-ties go to the lowest (edge, offset)."""
    d = [graph.distance(c, ref) for c in cands]
    top = max(d)
    slack = _TIE * max(1.0, top)
    return min(c for c, x in zip(cands, d) if x >= top - slack)


class FleeEvader(Strategy):
    """Runs away from where the pursuer will be if it plays greedily.

    Candidates are the endpoints of all non-backtracking walks of length beta
    plus staying put. With ``predict=False`` it flees from the pursuer's current
    position instead.
    """

    name = "flee"

    def __init__(self, graph: MetricGraph, beta: float, predict: bool = True):
        self.graph = graph
        self.beta = beta
        self.predict = predict

    def step(self, own, opponent_prefix):
        L = opponent_prefix[-1]
        ref = beta_pursuit_step(self.graph, L, own, self.beta) if self.predict else L
        cands = walk_endpoints(self.graph, own, self.beta) + [self.graph.canonical(own)]
        return _argmax_far(self.graph, cands, ref)


class ScriptedEvader(Strategy):
    """Follows a fixed position list, holding the last entry."""

    name = "scripted"

    def __init__(self, graph: MetricGraph, beta: float, positions: Sequence[GraphPoint]):
        if not positions:
            raise InputDomainError("scripted evader needs at least one position")
        self.graph = graph
        self.beta = beta
        self.positions = [graph.canonical(p) for p in positions]

    def step(self, own, opponent_prefix):
        i = len(opponent_prefix)
        return self.positions[min(i, len(self.positions) - 1)]


class RandomWalkEvader(Strategy):
    """Seeded random walk: each step a random walk endpoint at a random length in [0, beta]."""

    name = "random-walk"

    def __init__(self, graph: MetricGraph, beta: float, seed: int = 0):
        self.graph = graph
        self.beta = beta
        self.seed = seed
        self.reset()

    def reset(self):
        self._rng = np.random.default_rng(self.seed)
        self._moves: list[GraphPoint] = []

    def step(self, own, opponent_prefix):
        i = len(opponent_prefix) - 1
        # draws are indexed by step so the walk never depends on the opponent
        while len(self._moves) <= i:
            self._moves.append(self._draw(own))
        return self._moves[i]

    def _draw(self, own):
        r = float(self._rng.uniform(0.0, self.beta))
        cands = walk_endpoints(self.graph, own, r)
        return cands[int(self._rng.integers(len(cands)))]


class MaximinEvader(Strategy):
    """Depth-limited maximin over a grid of the graph.

    Grid: vertices plus edge points spaced at most beta/2. One move reaches any
    grid point within beta. The value of a state is the smallest distance the
    evader can guarantee over the next ``horizon`` steps when the pursuer
    answers each evader move with its best grid move.

    Candidate moves are the grid points in reach plus the exact beta moves,
    each scored at its nearest grid point. Scores within beta/2 of the best
    count as ties, broken by distance from the predicted greedy pursuer.
    """

    name = "maximin"
    MAX_POSITIONS = 200
    MAX_HORIZON = 12

    def __init__(self, graph: MetricGraph, beta: float, horizon: int = 6):
        if not (1 <= horizon <= self.MAX_HORIZON):
            raise InputDomainError(f"maximin horizon must lie in [1, {self.MAX_HORIZON}]")
        self.graph = graph
        self.beta = beta
        self.horizon = horizon
        self.grid = dense_sample(graph, beta / 2.0)
        n = len(self.grid)
        if n > self.MAX_POSITIONS:
            raise InputDomainError(f"maximin grid has {n} positions, limit {self.MAX_POSITIONS}")
        self._pts = self.grid.points()
        D = graph.pairwise(self.grid)
        self.D = D
        reach = D <= beta + TOL
        width = int(reach.sum(axis=1).max())
        nbr = np.empty((n, width), dtype=np.int64)
        for i in range(n):
            idx = np.flatnonzero(reach[i])
            nbr[i, : len(idx)] = idx
            nbr[i, len(idx):] = i  # padding with a legal move
        self.nbr = nbr
        # W[h][e, p]: guaranteed min distance over the next h steps
        W = [np.full((n, n), np.inf)]
        for _ in range(horizon):
            M = np.minimum(D, W[-1])
            A = M[:, nbr].min(axis=2)  # A[e', p] = min over pursuer moves from p
            W.append(A[nbr, :].max(axis=1))  # max over evader moves from e
        self._M = np.minimum(D, W[horizon - 1])

    def _snap(self, p: GraphPoint) -> int:
        d = [self.graph.distance(p, q) for q in self._pts]
        return int(np.argmin(d))

    def step(self, own, opponent_prefix):
        L = opponent_prefix[-1]
        g = self.graph
        # grid points in reach plus the exact beta moves, each scored at its nearest grid point
        cands = [q for q in self._pts if g.distance(own, q) <= self.beta + TOL]
        cands += walk_endpoints(g, own, self.beta) + [g.canonical(own)]
        pn = self.nbr[self._snap(L)]
        scores = self._M[np.ix_([self._snap(q) for q in cands], pn)].min(axis=1)
        best = scores.max()
        # scores within grid resolution are a tie; break it like the flee evader
        near = [q for q, s in zip(cands, scores) if s >= best - self.beta / 2.0]
        return _argmax_far(g, near, beta_pursuit_step(g, L, own, self.beta))


EVADER_KINDS = ("flee", "scripted", "random-walk", "maximin", "stationary")


def make_evader(kind: str, graph: MetricGraph, beta: float, **params) -> Strategy:
    """Evader factory. Extra parameters: ``positions`` (scripted), ``seed`` (random-walk),
    ``horizon`` (maximin), ``predict`` (flee)."""
    if kind == "flee":
        return FleeEvader(graph, beta, predict=params.get("predict", True))
    if kind == "scripted":
        return ScriptedEvader(graph, beta, params["positions"])
    if kind == "random-walk":
        return RandomWalkEvader(graph, beta, seed=params.get("seed", 0))
    if kind == "maximin":
        return MaximinEvader(graph, beta, horizon=params.get("horizon", 6))
    if kind == "stationary":
        return Stationary(graph, beta)
    raise InputDomainError(f"unknown evader kind {kind!r}; expected one of {EVADER_KINDS}")


def play_against_fixed(strategy: Strategy, own0: GraphPoint, opponent: Sequence[GraphPoint]) -> list[GraphPoint]:
    """Outputs of ``strategy`` against a fixed opponent sequence (for causality checks).

    Entry i+1 of the result is produced from the opponent prefix ``opponent[:i+1]``.
    """
    strategy.reset()
    out = [own0]
    for i in range(len(opponent)):
        out.append(strategy.step(out[-1], list(opponent[: i + 1])))
    return out


StrategyFactory = Callable[[], Strategy]
