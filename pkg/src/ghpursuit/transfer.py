"""Moving a pursuer strategy from X~ to a nearby space X through a chaining.

Per step i the transferred pursuer on X

1. steps the shadow evader M~ (in X~) toward f~(M(i beta));
2. asks the inner X~ strategy for the next simulated pursuer position L~,
   feeding it the shadow evader's prefix;
3. steps the real pursuer toward f(L~(i beta)).

Every step uses beta-pursuit, so the result is beta-stepwise on X.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .chaining import Chaining
from .game import GameRecord, run_game
from .metric_graph import TOL, GraphPoint, InputDomainError
from .pursuit import Strategy, StrategyProtocolError, beta_pursuit_step, horizon_steps

__all__ = [
    "TransferStrategy",
    "transfer_strategy",
    "theorem_bound",
    "transfer_beta",
    "certify_transfer_bound",
    "TransferGame",
]


def transfer_beta(ch: Chaining) -> float:
    """Step length of the construction: the square root of the closeness scale (chaining parameter / 4)."""
    return math.sqrt(ch.scale)


def theorem_bound(alpha: float, T: float, scale: float) -> float:
    return alpha + (20.0 * T + 8.0) * math.sqrt(scale)


class TransferStrategy(Strategy):
    name = "transferred"

    def __init__(self, ch: Chaining, inner: Callable[[GraphPoint], Strategy], beta: float, T: float,
                 L0: GraphPoint, alpha: float | None = None, beta_override: bool = False):
        """``inner`` builds the X~ strategy for a given X~ start position."""
        if not (T > 0):
            raise InputDomainError("T must be positive")
        expected = transfer_beta(ch)
        self.warnings: list[str] = []
        if abs(beta - expected) > 1e-12 * max(1.0, expected):
            if not beta_override:
                raise InputDomainError(f"beta must equal sqrt(eps) = {expected!r}, got {beta!r}")
            self.warnings.append(f"beta overridden: {beta!r} instead of {expected!r}")
        if alpha is None:
            self.warnings.append("alpha not supplied; theorem preconditions unchecked")
        elif not (0.0 < alpha < 1.0 and 0.0 < ch.scale < alpha * alpha):
            raise InputDomainError(f"need alpha in (0, 1) and eps in (0, alpha^2); got alpha={alpha!r}, eps={ch.scale!r}")
        for w in self.warnings:
            warnings.warn(w, stacklevel=2)
        self.ch = ch
        self.graph = ch.x
        self.beta = beta
        self.T = T
        self.N = horizon_steps(T, beta)
        self.L0 = ch.x.canonical(L0)
        self.alpha = alpha
        self._inner_factory = inner
        self.reset()

    def reset(self):
        ch = self.ch
        self.Lt0 = ch.f_tilde(self.L0)
        self.inner = self._inner_factory(self.Lt0)
        self.inner.reset()
        self.Mt: list[GraphPoint] = []
        self.Lt: list[GraphPoint] = [self.Lt0]
        self.fM: list[GraphPoint] = []  # f~(M(i beta))
        self.fL: list[GraphPoint] = []  # f(L~(i beta))
        self.L: list[GraphPoint] = []

    def step(self, own, opponent_prefix):
        ch = self.ch
        xt = ch.xt
        i = len(opponent_prefix) - 1
        if i != len(self.L):
            raise StrategyProtocolError(f"{self.name} (expected prefix of length {len(self.L) + 1})", i, float("nan"), self.beta)
        self.L.append(own)
        fm = ch.f_tilde(opponent_prefix[i])
        self.fM.append(fm)
        if i == 0:
            self.Mt.append(fm)
        # M~ at step i is already fixed; extend it to i+1 and L~ to i+1
        Mt_next = beta_pursuit_step(xt, self.Mt[i], fm, self.beta)
        if (i + 1) * self.beta > self.T + TOL:
            Lt_next = self.Lt[i]  # L~ held after the horizon
        else:
            Lt_next = xt.canonical(self.inner.step(self.Lt[i], self.Mt))
            d = xt.distance(self.Lt[i], Lt_next)
            if d > self.beta + TOL:
                raise StrategyProtocolError(f"inner strategy ({self.inner.name})", i + 1, d, self.beta)
        self.Mt.append(Mt_next)
        self.Lt.append(Lt_next)
        fl = ch.f(self.Lt[i])
        self.fL.append(fl)
        return beta_pursuit_step(self.graph, own, fl, self.beta)


def transfer_strategy(ch: Chaining, inner: Callable[[GraphPoint], Strategy], beta: float, T: float,
                      L0: GraphPoint, alpha: float | None = None, beta_override: bool = False) -> TransferStrategy:
    return TransferStrategy(ch, inner, beta, T, L0, alpha=alpha, beta_override=beta_override)


@dataclass
class TransferGame:
    record: GameRecord
    inner_distances: np.ndarray  # rho~(L~_i, M~_i)
    pur_m: np.ndarray  # rho~(f~(M_i), M~_i)
    pur_l: np.ndarray  # rho(f(L~_i), L_i)
    extra: dict = field(default_factory=dict)


def _play(ch: Chaining, inner, beta, T, alpha, L0, M0, evader, beta_override=False) -> TransferGame:
    strat = TransferStrategy(ch, inner, beta, T, L0, alpha=alpha, beta_override=beta_override)
    rec = run_game(ch.x, strat, evader, L0, M0, beta, T)
    xt, x = ch.xt, ch.x
    n = rec.steps
    # the last M, L positions were never shown to the strategy; project them here
    fM = strat.fM + [ch.f_tilde(rec.evader[n])]
    fL = strat.fL + [ch.f(strat.Lt[n])]
    inner_d = np.array([xt.distance(a, b) for a, b in zip(strat.Lt, strat.Mt)])
    pur_m = np.array([xt.distance(a, b) for a, b in zip(fM, strat.Mt)])
    pur_l = np.array([x.distance(a, b) for a, b in zip(fL, rec.pursuer.positions)])
    return TransferGame(rec, inner_d, pur_m, pur_l)


def certify_transfer_bound(ch: Chaining, inner: Callable[[GraphPoint], Strategy], alpha: float, T: float,
                           evader_suite: Sequence[tuple[str, Callable[[], Strategy]]],
                           trials: Sequence[tuple[GraphPoint, GraphPoint]], beta: float | None = None,
                           beta_override: bool = False, tol: float = 1e-7, return_games: bool = False):
    """Play the transferred pursuer against every (evader, start pair) and compare with the bounds.

    ``trials`` are (L0, M0) pairs in X. The report holds one record per game
    plus a summary block ``{bound, worst_min_distance, violated}``. With
    ``return_games`` the per-game trajectories come back as a second value.
    """
    if beta is None:
        beta = transfer_beta(ch)
    scale = ch.scale
    N = horizon_steps(T, beta)
    dis_f = ch.dis_f()
    dis_ft = ch.dis_f_tilde()
    bound = theorem_bound(alpha, T, scale)
    # the proof's estimate before simplification, with measured distortions and i = N - 1
    chain_bound = alpha + 4 * beta + 4 * scale + (N - 1) * (dis_f + dis_ft) + dis_ft
    # the same chain with the certified ceiling 10 * scale for both distortions
    ceiling_bound = alpha + 4 * beta + 4 * scale + (N - 1) * 20 * scale + 10 * scale
    games = []
    for name, make in evader_suite:
        for L0, M0 in trials:
            tg = _play(ch, inner, beta, T, alpha, L0, M0, make(), beta_override)
            rec = tg.record
            idx = np.arange(len(tg.pur_m))
            thr_m = beta + idx * dis_ft
            thr_l = beta + idx * dis_f
            # per-game estimate chain evaluated at the inner game's best grid time
            tau = int(np.argmin(tg.inner_distances))
            at_tau = (beta + tau * dis_f + dis_ft + 4 * scale + float(tg.inner_distances[tau])
                      + beta + tau * dis_ft)
            d_tau = float(rec.distances[tau])
            inner_min = float(tg.inner_distances.min())
            g = {
                "evader": name,
                "L0": [L0.edge, L0.offset],
                "M0": [M0.edge, M0.offset],
                "steps": rec.steps,
                "min_distance": rec.min_distance,
                "argmin_step": rec.argmin,
                "inner_min_distance": inner_min,
                "inner_captured": inner_min <= alpha + 2 * beta + tol,
                "inner_alpha_plus_2beta": alpha + 2 * beta,
                "tau": tau,
                "distance_at_tau": d_tau,
                "chain_at_tau": at_tau,
                "chain_at_tau_ok": d_tau <= at_tau + tol,
                "pur_m_max_excess": float((tg.pur_m - thr_m).max()),
                "pur_l_max_excess": float((tg.pur_l - thr_l).max()),
                "pur_m_ok": bool((tg.pur_m <= thr_m + tol).all()),
                "pur_l_ok": bool((tg.pur_l <= thr_l + tol).all()),
                "lipschitz_ok": rec.check(),
                "violated": rec.min_distance > bound + tol,
            }
            games.append((g, tg))
    records = [g for g, _ in games]
    worst = max(g["min_distance"] for g in records)
    report = {
        "alpha": alpha,
        "T": T,
        "eps": scale,
        "chaining_eps": ch.eps,
        "beta": beta,
        "beta_override": bool(beta_override),
        "N": N,
        "dis_f": dis_f,
        "dis_f_tilde": dis_ft,
        "dis_h": ch.h.distortion,
        "theorem_bound": bound,
        "proof_chain_bound": chain_bound,
        "ceiling_chain_bound": ceiling_bound,
        "grid_slack": beta,
        "games": records,
        "summary": {
            "bound": bound,
            "worst_min_distance": worst,
            "violated": any(g["violated"] for g in records),
        },
    }
    if return_games:
        return report, [tg for _, tg in games]
    return report
