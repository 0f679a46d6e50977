"""Experiment orchestration: configs, transfer sweeps, refinement tables, GH sweeps, single games.

Configs are JSON objects. Graph specs take one of the forms

* ``{"generator": "interval", "params": {"length": 1}}``
* ``{"file": "graph.json"}``
* ``{"vertices": [...], "edges": [...]}``

optionally with ``"subdivide": max_edge_length`` and
``"perturb": {"magnitude": m, "seed": s}`` applied in that order.
Point specs: ``[edge, offset]``, ``{"vertex": id}``, ``{"arc": x}`` (arc length
from the start of a path graph, or from vertex 0 around a cycle graph) or ``{"farthest_from": <point spec>}``.

Parallelism: ``GHPURSUIT_WORKERS`` (default 1) sets the number of worker
processes for sweep points and refinement levels. Results are assembled in
config order whatever the worker count.
"""
from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .chaining import Chaining, ChainingError, build_chaining
from .game import capture_radius_estimate, run_game
from .generators import generate
from .metric_graph import GraphPoint, InputDomainError, MetricGraph, dense_sample, load_graph, perturb_lengths, subdivide
from .nets import Correspondence, gh_bounds
from .pursuit import GreedyPursuer, Stationary, make_evader
from .segment import SegmentChart
from .transfer import certify_transfer_bound, theorem_bound, transfer_beta

__all__ = [
    "ExperimentConfig",
    "KINDS",
    "load_config",
    "resolve_graph",
    "resolve_point",
    "evader_suite",
    "perturbed_copy",
    "shuffled_chaining",
    "run_transfer_experiment",
    "run_refinement_experiment",
    "run_gh_sweep",
    "run_single_game",
    "run_experiment",
    "workers",
]

KINDS = ("transfer-bound", "graph-refinement", "gh-sweep", "single-game")
WORKERS_ENV = "GHPURSUIT_WORKERS"


def workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        raise InputDomainError(f"{WORKERS_ENV} must be an integer") from None


def _pmap(fn: Callable, items: list) -> list:
    n = min(workers(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


@dataclass
class ExperimentConfig:
    kind: str
    graph: Any = None  # base space (X~ for transfers)
    reference: Any = None  # limit space for refinement / gh sweeps
    levels: list = field(default_factory=list)
    alpha: float | None = None
    T: float = 1.0
    eps: list = field(default_factory=list)
    beta: float | None = None
    evaders: list = field(default_factory=lambda: [{"kind": "flee"}])
    starts: list = field(default_factory=list)  # [[L0 spec, M0 spec], ...]
    pursuer: str = "greedy"
    seed: int = 0
    net_radius: float = 0.01
    subdivide: float | None = 0.25
    negative_control: bool = False
    identical: bool = False
    alpha_limit: float | None = None
    beta_override: float | None = None  # transfer only; marks the report as tainted
    expect_no_capture: bool = False  # single-game: distance must never drop below the start
    output: str | None = None
    base_dir: str | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputDomainError(f"unknown experiment kind {self.kind!r}; expected one of {KINDS}")
        if not (self.T > 0):
            raise InputDomainError("T must be positive")
        if isinstance(self.eps, (int, float)):
            self.eps = [self.eps]
        if self.kind == "transfer-bound":
            if self.alpha is None or not (0.0 < self.alpha < 1.0):
                raise InputDomainError(f"transfer experiments need alpha in (0, 1), got {self.alpha!r}")
            if not self.eps:
                raise InputDomainError("transfer experiments need at least one eps")
            for e in self.eps:
                if not (0.0 < e < self.alpha ** 2):
                    raise InputDomainError(f"eps={e!r} outside (0, alpha^2) = (0, {self.alpha ** 2!r})")
        if self.kind in ("graph-refinement", "gh-sweep") and not self.levels:
            raise InputDomainError(f"{self.kind} needs a nonempty 'levels' list")
        if self.kind in ("graph-refinement", "single-game") and not (self.beta and self.beta > 0):
            raise InputDomainError(f"{self.kind} needs a positive beta")

    @classmethod
    def from_dict(cls, d: dict, base_dir: str | None = None) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known - {"description"}
        if extra:
            raise InputDomainError(f"unknown config fields {sorted(extra)}")
        d = {k: v for k, v in d.items() if k in known and k != "base_dir"}
        return cls(**d, base_dir=base_dir)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("base_dir")
        return d


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    with open(path) as fh:
        return ExperimentConfig.from_dict(json.load(fh), base_dir=str(path.parent))


# -- specs ---------------------------------------------------------------------


def resolve_graph(spec, base_dir: str | None = None) -> MetricGraph:
    if isinstance(spec, MetricGraph):
        return spec
    if not isinstance(spec, dict):
        raise InputDomainError(f"bad graph spec {spec!r}")
    if "generator" in spec:
        g = generate(spec["generator"], **spec.get("params", {}))
    elif "file" in spec:
        p = Path(spec["file"])
        if base_dir and not p.is_absolute():
            p = Path(base_dir) / p
        g = load_graph(p)
    elif "vertices" in spec:
        g = MetricGraph.from_dict(spec)
    else:
        raise InputDomainError(f"graph spec needs 'generator', 'file' or 'vertices': {spec!r}")
    if spec.get("subdivide"):
        g = subdivide(g, float(spec["subdivide"]))
    if spec.get("perturb"):
        p = spec["perturb"]
        g = perturb_lengths(g, float(p["magnitude"]), int(p.get("seed", 0)))
    return g


def resolve_point(graph: MetricGraph, spec) -> GraphPoint:
    if isinstance(spec, GraphPoint):
        return graph.canonical(spec)
    if isinstance(spec, (list, tuple)) and len(spec) == 2:
        return graph.canonical(GraphPoint(int(spec[0]), float(spec[1])))
    if isinstance(spec, dict):
        if "vertex" in spec:
            return graph.point_at_vertex(spec["vertex"])
        if "arc" in spec:
            chart = SegmentChart.of(graph)
            x = float(spec["arc"])
            if chart is None:
                chart = SegmentChart.of_cycle(graph)
                if chart is None:
                    raise InputDomainError("'arc' points need a path or cycle graph")
                x %= chart.length
            return chart.point(x)
        if "farthest_from" in spec:
            p = resolve_point(graph, spec["farthest_from"])
            s = dense_sample(graph, graph.diameter() / 256.0)
            d = graph.pairwise(s.__class__(np.array([p.edge]), np.array([p.offset])), s)[0]
            # vertices come first in the sample, so exact ties favour vertices
            return graph.canonical(s.point(int(np.argmax(d >= d.max() - 1e-12))))
    raise InputDomainError(f"bad point spec {spec!r}")


def _evader_name(spec: dict) -> str:
    kind = spec["kind"]
    if kind == "random-walk":
        return f"{kind}:{spec.get('seed', 0)}"
    if kind == "maximin":
        return f"{kind}:{spec.get('horizon', 6)}"
    return kind


def evader_suite(graph: MetricGraph, beta: float, specs: list[dict], seed: int = 0) -> list[tuple[str, Callable]]:
    """Named evader factories; random-walk seeds are offset by ``seed``."""
    out = []
    for spec in specs:
        spec = dict(spec)
        kind = spec.pop("kind")
        if kind == "random-walk":
            spec["seed"] = int(spec.get("seed", 0)) + seed
        if kind == "scripted":
            spec["positions"] = [resolve_point(graph, p) for p in spec["positions"]]
        name = _evader_name({"kind": kind, **spec})
        out.append((name, (lambda k=kind, s=spec: make_evader(k, graph, beta, **s))))
    return out


def _pursuer_factory(kind: str, graph: MetricGraph, beta: float) -> Callable:
    if kind == "greedy":
        return lambda: GreedyPursuer(graph, beta)
    if kind == "stationary":
        return lambda: Stationary(graph, beta)
    raise InputDomainError(f"unknown pursuer {kind!r}")


def perturbed_copy(Xt: MetricGraph, eps: float, seed: int) -> MetricGraph:
    """Lengths shifted by at most 2 eps / |E| each.

    Any path crosses every edge at most once when it is a shortest path, so the
    identity on vertices distorts by at most 2 eps and d_GH(X, X~) <= eps.
    """
    return perturb_lengths(Xt, 2.0 * eps / Xt.n_edges, seed)


def shuffled_chaining(ch: Chaining, seed: int) -> Chaining:
    """Same nets, random bijection: a deliberately broken chaining for negative controls."""
    n = len(ch.net_xt)
    perm = np.random.default_rng(seed).permutation(n)
    h = Correspondence(ch.net_xt, ch.net_x, perm, float("nan"))
    return Chaining(ch.x, ch.xt, ch.net_x, ch.net_xt, h, ch.eps, ch.scale)


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True, default=_jsonable)


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serializable: {type(x)}")


def _default_starts(graph: MetricGraph) -> list:
    v0 = {"vertex": graph.vertices[0]}
    return [[v0, {"farthest_from": v0}]]


# -- transfer ------------------------------------------------------------------


def _transfer_point(args) -> dict:
    cfg_d, base_dir, eps, out_dir = args
    cfg = ExperimentConfig.from_dict(cfg_d, base_dir=base_dir)
    base = resolve_graph(cfg.graph, cfg.base_dir)
    Xt = subdivide(base, cfg.subdivide) if cfg.subdivide else base
    X = Xt if cfg.identical else perturbed_copy(Xt, eps, cfg.seed)
    try:
        ch = build_chaining(X, Xt, eps)
    except ChainingError as exc:
        return {"eps": eps, "error": str(exc), "best_distortion": exc.best_distortion,
                "summary": {"bound": theorem_bound(cfg.alpha, cfg.T, eps), "worst_min_distance": None,
                            "violated": True}}
    checks = ch.validate()
    if not checks["ok"]:
        raise RuntimeError(f"chaining failed its own validation at eps={eps}: {checks}")
    beta = transfer_beta(ch)
    starts = cfg.starts or _default_starts(X)
    trials = [(resolve_point(X, a), resolve_point(X, b)) for a, b in starts]
    # the inner strategy's hypothesis: alpha-capture on X~ from the projected starts
    inner_suite = evader_suite(Xt, beta, cfg.evaders, cfg.seed)
    inner_mk = _pursuer_factory(cfg.pursuer, Xt, beta)
    inner_radius = max(
        capture_radius_estimate(Xt, inner_mk, [f for _, f in inner_suite], [ch.f_tilde(a)], [ch.f_tilde(b)], beta, cfg.T)
        for a, b in trials
    )
    if cfg.negative_control:
        ch = shuffled_chaining(ch, cfg.seed)
    suite = evader_suite(X, beta, cfg.evaders, cfg.seed)
    if cfg.beta_override:
        beta = float(cfg.beta_override)
        suite = evader_suite(X, beta, cfg.evaders, cfg.seed)
        inner_mk = _pursuer_factory(cfg.pursuer, Xt, beta)
    report, games = certify_transfer_bound(ch, lambda p: inner_mk(), cfg.alpha, cfg.T, suite, trials, beta=beta,
                                           beta_override=bool(cfg.beta_override), return_games=True)
    report["tainted"] = bool(cfg.beta_override)
    for tg in games:
        if not tg.record.check():
            raise RuntimeError("transfer game failed trajectory validation")
    report["eps"] = eps
    report["inner_capture_radius"] = inner_radius
    report["inner_certified"] = inner_radius <= cfg.alpha
    report["negative_control"] = cfg.negative_control
    report["chaining_checks"] = checks
    if cfg.negative_control:
        report["dis_h"] = None
    report["excess"] = report["summary"]["worst_min_distance"] - cfg.alpha
    if out_dir is not None:
        worst = max(range(len(games)), key=lambda k: games[k].record.min_distance)
        games[worst].record.to_csv(Path(out_dir) / f"transfer_eps{eps:.0e}_worst_game.csv")
    return report


def run_transfer_experiment(cfg: ExperimentConfig, out_dir: str | Path | None = None) -> dict:
    """One chaining and transfer certification per eps; writes ``transfer_report.json`` and ``transfer_sweep.csv``."""
    if cfg.kind != "transfer-bound":
        raise InputDomainError("not a transfer-bound config")
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
    items = [(cfg.to_dict(), cfg.base_dir, e, None if out_dir is None else str(out_dir)) for e in cfg.eps]
    points = _pmap(_transfer_point, items)
    violated = any(p["summary"]["violated"] for p in points)
    report = {
        "kind": cfg.kind,
        "config": cfg.to_dict(),
        "points": points,
        "summary": {
            "bound": max(p["summary"]["bound"] for p in points),
            "worst_min_distance": max((p["summary"]["worst_min_distance"] or 0.0) for p in points),
            "violated": violated,
        },
    }
    if out_dir is not None:
        _write_json(Path(out_dir) / "transfer_report.json", report)
        with open(Path(out_dir) / "transfer_sweep.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["eps", "sqrt_eps", "worst_min_distance", "excess", "theorem_bound", "proof_chain_bound", "violated"])
            for p in points:
                w.writerow([p["eps"], math.sqrt(p["eps"]), p["summary"]["worst_min_distance"], p.get("excess"),
                            p["summary"]["bound"], p.get("proof_chain_bound"), p["summary"]["violated"]])
    return report


# -- refinement ----------------------------------------------------------------


def _refine_level(args) -> dict:
    cfg_d, base_dir, k = args
    cfg = ExperimentConfig.from_dict(cfg_d, base_dir=base_dir)
    G = resolve_graph(cfg.levels[k], cfg.base_dir)
    row = {"level": k, "vertices": G.n_vertices, "edges": G.n_edges, "max_edge": float(G.edge_length.max())}
    if cfg.reference is not None:
        ref = resolve_graph(cfg.reference, cfg.base_dir)
        try:
            est = gh_bounds(G, ref, cfg.net_radius)
            row.update(gh_upper=est.upper, gh_lower=est.lower, gh_distortion=est.distortion)
        except (ChainingError, InputDomainError, MemoryError) as exc:
            row.update(gh_upper=None, gh_lower=None, error=str(exc))
    starts = cfg.starts or _default_starts(G)
    suite = evader_suite(G, cfg.beta, cfg.evaders, cfg.seed)
    pm = _pursuer_factory(cfg.pursuer, G, cfg.beta)
    radius = 0.0
    for a, b in starts:
        radius = max(radius, capture_radius_estimate(G, pm, [f for _, f in suite], [resolve_point(G, a)],
                                                     [resolve_point(G, b)], cfg.beta, cfg.T))
    row["alpha_n"] = radius
    return row


def run_refinement_experiment(cfg: ExperimentConfig, out_dir: str | Path | None = None) -> dict:
    """Table of (level, GH upper bound to the reference, measured capture radius).

    Asserted on the output: every alpha_n lies within two longest-edge lengths of
    the limit value (``alpha_limit``, else the finest level's alpha_n), and the GH
    upper bounds strictly decrease along the levels.
    """
    if cfg.kind != "graph-refinement":
        raise InputDomainError("not a graph-refinement config")
    rows = _pmap(_refine_level, [(cfg.to_dict(), cfg.base_dir, k) for k in range(len(cfg.levels))])
    target = cfg.alpha_limit if cfg.alpha_limit is not None else rows[-1]["alpha_n"]
    for r in rows:
        r["alpha_tolerance"] = 2.0 * r["max_edge"]
        r["alpha_ok"] = abs(r["alpha_n"] - target) <= r["alpha_tolerance"] + 1e-9
    ghs = [r.get("gh_upper") for r in rows]
    gh_ok = None
    if cfg.reference is not None:
        gh_ok = all(g is not None for g in ghs) and all(a > b for a, b in zip(ghs, ghs[1:]))
    violated = not all(r["alpha_ok"] for r in rows) or gh_ok is False
    report = {
        "kind": cfg.kind,
        "config": cfg.to_dict(),
        "alpha_limit": target,
        "levels": rows,
        "gh_monotone": gh_ok,
        "summary": {"bound": target, "worst_min_distance": max(r["alpha_n"] for r in rows), "violated": violated},
    }
    if out_dir is not None:
        _write_json(Path(out_dir) / "refinement_report.json", report)
        with open(Path(out_dir) / "refinement.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["level", "vertices", "max_edge", "gh_upper", "gh_lower", "alpha_n", "alpha_ok"])
            for r in rows:
                w.writerow([r["level"], r["vertices"], r["max_edge"], r.get("gh_upper"), r.get("gh_lower"),
                            r["alpha_n"], r["alpha_ok"]])
    return report


# -- gh sweep ------------------------------------------------------------------


def _gh_level(args) -> dict:
    cfg_d, base_dir, k = args
    cfg = ExperimentConfig.from_dict(cfg_d, base_dir=base_dir)
    G = resolve_graph(cfg.levels[k], cfg.base_dir)
    ref = resolve_graph(cfg.reference, cfg.base_dir)
    est = gh_bounds(G, ref, cfg.net_radius)
    return {"level": k, "gh_lower": est.lower, "gh_upper": est.upper, "distortion": est.distortion,
            "radius_x": est.radius_x, "radius_y": est.radius_y, "direction": est.direction}


def run_gh_sweep(cfg: ExperimentConfig, out_dir: str | Path | None = None) -> dict:
    """GH bracket of each level against the reference; a bracket with lower > upper is a violation."""
    if cfg.kind != "gh-sweep" or cfg.reference is None:
        raise InputDomainError("gh-sweep needs levels and a reference")
    rows = _pmap(_gh_level, [(cfg.to_dict(), cfg.base_dir, k) for k in range(len(cfg.levels))])
    bad = [r for r in rows if r["gh_lower"] > r["gh_upper"] + 1e-12]
    report = {
        "kind": cfg.kind,
        "config": cfg.to_dict(),
        "levels": rows,
        "summary": {"bound": max(r["gh_upper"] for r in rows), "worst_min_distance": max(r["gh_lower"] for r in rows),
                    "violated": bool(bad)},
    }
    if out_dir is not None:
        _write_json(Path(out_dir) / "gh_report.json", report)
    return report


# -- single game ---------------------------------------------------------------


def run_single_game(cfg: ExperimentConfig, out_dir: str | Path | None = None) -> dict:
    """One game per start pair and evader.

    With ``alpha`` set, a min distance above it is a violation; with
    ``expect_no_capture``, a min distance below the starting distance is.
    """
    if cfg.kind != "single-game":
        raise InputDomainError("not a single-game config")
    G = resolve_graph(cfg.graph, cfg.base_dir)
    starts = cfg.starts or _default_starts(G)
    suite = evader_suite(G, cfg.beta, cfg.evaders, cfg.seed)
    pm = _pursuer_factory(cfg.pursuer, G, cfg.beta)
    games = []
    for k, (a, b) in enumerate(starts):
        L0, M0 = resolve_point(G, a), resolve_point(G, b)
        for name, mk in suite:
            rec = run_game(G, pm(), mk(), L0, M0, cfg.beta, cfg.T)
            if not rec.check():
                raise RuntimeError("game record failed validation")
            s = rec.summary()
            s["start"] = k
            s["initial_distance"] = float(rec.distances[0])
            games.append(s)
            if out_dir is not None:
                Path(out_dir).mkdir(parents=True, exist_ok=True)
                rec.to_csv(Path(out_dir) / f"game_{k}_{name.replace(':', '-')}.csv")
    worst = max(g["min_distance"] for g in games)
    violated = cfg.alpha is not None and worst > cfg.alpha + 1e-9
    if cfg.expect_no_capture:
        violated = violated or any(g["min_distance"] < g["initial_distance"] - 1e-9 for g in games)
    report = {"kind": cfg.kind, "config": cfg.to_dict(), "games": games,
              "summary": {"bound": cfg.alpha, "worst_min_distance": worst, "violated": violated}}
    if out_dir is not None:
        _write_json(Path(out_dir) / "game_report.json", report)
    return report


def run_experiment(cfg: ExperimentConfig, out_dir: str | Path | None = None) -> dict:
    return {
        "transfer-bound": run_transfer_experiment,
        "graph-refinement": run_refinement_experiment,
        "gh-sweep": run_gh_sweep,
        "single-game": run_single_game,
    }[cfg.kind](cfg, out_dir)
