"""Discrete-time games with simultaneous moves."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .metric_graph import TOL, GraphPoint, InputDomainError, MetricGraph
from .pursuit import Strategy, StrategyProtocolError, Trajectory, horizon_steps

__all__ = ["GameRecord", "run_game", "capture_radius_estimate", "capture_sweep"]


@dataclass
class GameRecord:
    graph: MetricGraph
    beta: float
    steps: int
    pursuer: Trajectory
    evader: Trajectory
    distances: np.ndarray
    pursuer_name: str = ""
    evader_name: str = ""

    @property
    def min_distance(self) -> float:
        return float(self.distances.min())

    @property
    def argmin(self) -> int:
        return int(np.argmin(self.distances))

    def check(self) -> bool:
        g = self.graph
        d = np.array([g.distance(a, b) for a, b in zip(self.pursuer.positions, self.evader.positions)])
        return (
            self.pursuer.is_lipschitz()
            and self.evader.is_lipschitz()
            and len(d) == self.steps + 1
            and bool(np.allclose(d, self.distances, rtol=0, atol=TOL))
        )

    def rows(self) -> list[tuple]:
        return [
            (i, i * self.beta, p.edge, p.offset, m.edge, m.offset, float(d))
            for i, (p, m, d) in enumerate(zip(self.pursuer.positions, self.evader.positions, self.distances))
        ]

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "time", "pursuer_edge", "pursuer_offset", "evader_edge", "evader_offset", "distance"])
            for r in self.rows():
                w.writerow([r[0], repr(r[1]), r[2], repr(r[3]), r[4], repr(r[5]), repr(r[6])])

    def summary(self) -> dict:
        return {
            "pursuer": self.pursuer_name,
            "evader": self.evader_name,
            "beta": self.beta,
            "steps": self.steps,
            "min_distance": self.min_distance,
            "argmin_step": self.argmin,
        }


def run_game(graph: MetricGraph, pursuer: Strategy, evader: Strategy, L0: GraphPoint, M0: GraphPoint,
             beta: float, T: float, evader_first: bool = False) -> GameRecord:
    """Play ``ceil(T/beta)`` steps. Both players see positions through step i and commit step i+1.

    ``evader_first`` only swaps the order in which the two strategies are
    queried; with simultaneous moves the outcome is the same.
    """
    N = horizon_steps(T, beta)
    L = [graph.canonical(L0)]
    M = [graph.canonical(M0)]
    pursuer.reset()
    evader.reset()
    dist = [graph.distance(L[0], M[0])]
    for i in range(N):
        # each strategy gets a snapshot view of the other's prefix through step i
        if evader_first:
            m = evader.step(M[i], L)
            l = pursuer.step(L[i], M)
        else:
            l = pursuer.step(L[i], M)
            m = evader.step(M[i], L)
        l = graph.canonical(l)
        m = graph.canonical(m)
        dl = graph.distance(L[i], l)
        if dl > beta + TOL:
            raise StrategyProtocolError(f"pursuer ({pursuer.name})", i + 1, dl, beta)
        dm = graph.distance(M[i], m)
        if dm > beta + TOL:
            raise StrategyProtocolError(f"evader ({evader.name})", i + 1, dm, beta)
        L.append(l)
        M.append(m)
        dist.append(graph.distance(l, m))
    return GameRecord(graph, beta, N, Trajectory(graph, beta, L), Trajectory(graph, beta, M),
                      np.array(dist), pursuer.name, evader.name)


def capture_sweep(graph: MetricGraph, pursuer: Callable[[], Strategy], evader_suite: Sequence[Callable[[], Strategy]],
                  L0_set: Iterable[GraphPoint], M0_set: Iterable[GraphPoint], beta: float, T: float) -> list[GameRecord]:
    """Every (evader, L0, M0) game in a fixed order."""
    L0_set = list(L0_set)
    M0_set = list(M0_set)
    if not evader_suite or not L0_set or not M0_set:
        raise InputDomainError("evader suite and start sets must be nonempty")
    out = []
    for make in evader_suite:
        for L0 in L0_set:
            for M0 in M0_set:
                out.append(run_game(graph, pursuer(), make(), L0, M0, beta, T))
    return out


def capture_radius_estimate(graph: MetricGraph, pursuer: Callable[[], Strategy],
                            evader_suite: Sequence[Callable[[], Strategy]], L0_set: Iterable[GraphPoint],
                            M0_set: Iterable[GraphPoint], beta: float, T: float) -> float:
    """Largest game min distance over the suite and start sets: the pursuer's demonstrated capture radius."""
    return max(r.min_distance for r in capture_sweep(graph, pursuer, evader_suite, L0_set, M0_set, beta, T))
