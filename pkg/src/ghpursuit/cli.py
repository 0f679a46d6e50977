"""Command line entry point: ``ghpursuit <command> ...``.

Every command prints a JSON report to stdout (and writes it under ``--out``
when given). The exit status is 1 when a report's summary says a bound was
violated, 2 on bad input, 0 otherwise.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .chaining import ChainingError, build_chaining, save_chaining
from .experiments import ExperimentConfig, load_config, resolve_graph, run_experiment, _jsonable
from .generators import GENERATORS, generate
from .metric_graph import InputDomainError, load_graph, save_graph
from .nets import build_eps_net, gh_bounds


def _value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _params(pairs: list[str]) -> dict:
    out = {}
    for p in pairs or []:
        if "=" not in p:
            raise InputDomainError(f"--param expects key=value, got {p!r}")
        k, v = p.split("=", 1)
        out[k.replace("-", "_")] = _value(v)
    return out


def _emit(report: dict, out: str | None, name: str) -> int:
    text = json.dumps(report, indent=1, sort_keys=True, default=_jsonable)
    if out:
        path = Path(out)
        if path.suffix != ".json":
            path.mkdir(parents=True, exist_ok=True)
            path = path / name
        else:
            path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    summary = report.get("summary", report)
    print(json.dumps(summary if out else report, indent=1, sort_keys=True, default=_jsonable))
    return 1 if summary.get("violated") else 0


def _point(text: str):
    """``edge,offset`` or ``v:<vertex id>`` or ``arc:<x>``."""
    if text.startswith("v:"):
        return {"vertex": _value(text[2:])}
    if text.startswith("arc:"):
        return {"arc": float(text[4:])}
    if text.startswith("far:"):
        return {"farthest_from": _point(text[4:])}
    e, o = text.split(",")
    return [int(e), float(o)]


def cmd_generate(a) -> int:
    params = _params(a.param)
    if a.kind == "random-tree" and a.seed is not None:
        params["seed"] = a.seed
    g = generate(a.kind, **params)
    if a.out:
        save_graph(g, a.out)
    else:
        print(json.dumps(g.to_dict(), indent=1))
    return 0


def cmd_net(a) -> int:
    g = load_graph(a.graph)
    net = build_eps_net(g, a.eps)
    report = net.to_dict()
    report["size"] = len(net)
    report["summary"] = {"bound": a.eps, "worst_min_distance": net.radius, "violated": net.radius > a.eps + 1e-9}
    return _emit(report, a.out, "net.json")


def cmd_chain(a) -> int:
    X, Xt = load_graph(a.x), load_graph(a.xt)
    try:
        ch = build_chaining(X, Xt, a.eps, method=a.method)
    except ChainingError as exc:
        report = {"error": str(exc), "best_distortion": exc.best_distortion,
                  "summary": {"bound": 2 * a.eps, "worst_min_distance": exc.best_distortion, "violated": True}}
        return _emit(report, None, "")
    checks = ch.validate()
    if a.out:
        save_chaining(ch, a.out)
    report = {"size": len(ch.net_x), "checks": checks,
              "summary": {"bound": ch.eps, "worst_min_distance": checks["round_trip"], "violated": not checks["ok"]}}
    return _emit(report, None, "")


def cmd_ghdist(a) -> int:
    cfg = _config_from(a, "gh-sweep")
    if cfg is not None:
        return _emit(run_experiment(cfg, a.out), a.out, "gh_report.json")
    if not (a.x and a.y):
        raise InputDomainError("ghdist needs two graph files or --config")
    X, Y = load_graph(a.x), load_graph(a.y)
    est = gh_bounds(X, Y, a.net_radius)
    report = dict(vars(est))
    report["summary"] = {"bound": est.upper, "worst_min_distance": est.lower, "violated": est.lower > est.upper + 1e-12}
    return _emit(report, a.out, "ghdist.json")


def _config_from(a, kind: str) -> ExperimentConfig:
    if a.config:
        cfg = load_config(a.config)
        if cfg.kind != kind:
            raise InputDomainError(f"config kind is {cfg.kind!r}, command expects {kind!r}")
    else:
        cfg = None
    return cfg


def cmd_game(a) -> int:
    cfg = _config_from(a, "single-game")
    if cfg is None:
        if not a.graph or a.beta is None:
            raise InputDomainError("game needs --config or a graph file plus --beta")
        graph = resolve_graph({"file": a.graph})
        starts = [[_point(a.L0), _point(a.M0)]] if a.L0 and a.M0 else []
        cfg = ExperimentConfig(kind="single-game", graph=graph.to_dict(), beta=a.beta, T=a.T, alpha=a.alpha,
                               evaders=[{"kind": k} for k in (a.evader or ["flee"])], starts=starts,
                               pursuer=a.pursuer)
    if a.seed is not None:
        cfg.seed = a.seed
    return _emit(run_experiment(cfg, a.out), a.out, "game_report.json")


def cmd_transfer(a) -> int:
    cfg = _config_from(a, "transfer-bound")
    if cfg is None:
        raise InputDomainError("transfer needs --config")
    if a.seed is not None:
        cfg.seed = a.seed
    if a.eps:
        cfg.eps = a.eps
        cfg.__post_init__()
    if a.beta_override is not None:
        print(f"warning: beta overridden to {a.beta_override}; the report is tainted", file=sys.stderr)
        cfg.beta_override = a.beta_override
    return _emit(run_experiment(cfg, a.out), a.out, "transfer_report.json")


def cmd_refine(a) -> int:
    cfg = _config_from(a, "graph-refinement")
    if cfg is None:
        raise InputDomainError("refine needs --config")
    if a.seed is not None:
        cfg.seed = a.seed
    return _emit(run_experiment(cfg, a.out), a.out, "refinement_report.json")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ghpursuit", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a generated graph as JSON")
    g.add_argument("kind", choices=sorted(GENERATORS))
    g.add_argument("--param", action="append", metavar="KEY=VALUE", help="generator parameter (repeatable)")
    g.add_argument("--seed", type=int, help="seed for random generators")
    g.add_argument("--out", help="output graph file (stdout if omitted)")
    g.set_defaults(func=cmd_generate)

    n = sub.add_parser("net", help="farthest-point eps-net of a graph")
    n.add_argument("graph")
    n.add_argument("--eps", type=float, required=True)
    n.add_argument("--out")
    n.set_defaults(func=cmd_net)

    c = sub.add_parser("chain", help="build and validate a chaining between X and X~")
    c.add_argument("x")
    c.add_argument("xt")
    c.add_argument("--eps", type=float, required=True, help="closeness scale; the chaining parameter is 4 eps")
    c.add_argument("--method", choices=["auto", "segment", "explicit"], default="auto")
    c.add_argument("--out", help="chaining JSON file")
    c.set_defaults(func=cmd_chain)

    d = sub.add_parser("ghdist", help="Gromov-Hausdorff bracket between two graphs (or a gh-sweep config)")
    d.add_argument("x", nargs="?")
    d.add_argument("y", nargs="?")
    d.add_argument("--config")
    d.add_argument("--net-radius", type=float, default=0.05)
    d.add_argument("--out")
    d.set_defaults(func=cmd_ghdist)

    m = sub.add_parser("game", help="play single games")
    m.add_argument("graph", nargs="?")
    m.add_argument("--config")
    m.add_argument("--pursuer", choices=["greedy", "stationary"], default="greedy")
    m.add_argument("--evader", action="append", choices=["flee", "random-walk", "stationary", "maximin"])
    m.add_argument("--L0", help="edge,offset | v:<id> | arc:<x>")
    m.add_argument("--M0", help="edge,offset | v:<id> | arc:<x> | far:<point>")
    m.add_argument("--beta", type=float)
    m.add_argument("--T", type=float, default=1.0)
    m.add_argument("--alpha", type=float, help="assert min distance <= alpha")
    m.add_argument("--seed", type=int)
    m.add_argument("--out")
    m.set_defaults(func=cmd_game)

    t = sub.add_parser("transfer", help="certify the transferred-strategy bound")
    t.add_argument("--config", required=True)
    t.add_argument("--eps", type=float, nargs="+", help="override the config's eps list")
    t.add_argument("--beta-override", type=float, help="use this beta instead of sqrt(eps); taints the report")
    t.add_argument("--seed", type=int)
    t.add_argument("--out")
    t.set_defaults(func=cmd_transfer)

    r = sub.add_parser("refine", help="refinement table: GH bound and capture radius per level")
    r.add_argument("--config", required=True)
    r.add_argument("--seed", type=int)
    r.add_argument("--out")
    r.set_defaults(func=cmd_refine)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    try:
        return a.func(a)
    except (InputDomainError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
