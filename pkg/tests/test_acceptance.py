"""Acceptance criteria, one test each; every test adds a pass/fail line to the run summary."""
import math
import time
from pathlib import Path

import numpy as np
import pytest

from ghpursuit.chaining import build_chaining
from ghpursuit.experiments import load_config, perturbed_copy, run_refinement_experiment, run_transfer_experiment
from ghpursuit.game import run_game
from ghpursuit.generators import circle, interval, polygon, random_tree, theta
from ghpursuit.metric_graph import subdivide
from ghpursuit.nets import best_bijection, finite_gh_bound
from ghpursuit.pursuit import GreedyPursuer, beta_pursuit_curve, make_evader, play_against_fixed
from ghpursuit.transfer import TransferStrategy, transfer_beta

from conftest import ACCEPTANCE_LINES
from oracles import (
    circle_arc_point,
    finite_gh,
    lemma2_instances,
    lipschitz_walk,
    min_bijection_distortion,
    random_graph_point,
    random_metric,
)

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
TOL = 1e-7


def _record(n: int, title: str, ok: bool, detail: str, t0: float, limit: float | None = None):
    took = time.perf_counter() - t0
    if limit is not None and took > limit:
        ok = False
        detail += f"; took {took:.1f}s > {limit:.0f}s"
    ACCEPTANCE_LINES.append(f"criterion {n} [{'PASS' if ok else 'FAIL'}] {title}: {detail} ({took:.2f}s)")
    assert ok, detail


def test_criterion_1_pursuit_recursion():
    t0 = time.perf_counter()
    worst_slack = math.inf
    bad = []
    instances = lemma2_instances(100, seed=2024)
    for k, (g, L0, targets, beta, delta) in enumerate(instances):
        gaps = [g.distance(a, b) for a, b in zip(targets, targets[1:])]
        assert max(gaps, default=0.0) <= beta * (1 + delta) + 1e-12  # the instance meets the hypothesis
        tr = beta_pursuit_curve(g, L0, targets, beta)
        rho0 = g.distance(tr[0], targets[0])
        for i, m in enumerate(targets):
            slack = beta + i * delta * beta + rho0 - g.distance(tr[i], m)
            worst_slack = min(worst_slack, slack)
            if slack < -TOL:
                bad.append((k, i, slack))
    _record(1, "pursuit recursion", not bad,
            f"{len(instances)} instances on interval/circle/theta/tree, min slack {worst_slack:.3g}, "
            f"failures {len(bad)}", t0, 10)


def _chaining_cases():
    cases = []
    for k, sc in enumerate([1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5]):
        xt = subdivide(interval(1.0), 0.25)
        cases.append((perturbed_copy(xt, sc, k), xt, sc, "segment"))
    for sc in (1e-2, 1e-3, 1e-4):
        cases.append((interval(1.0 + sc), interval(1.0), sc, "segment"))
    for k, sc in enumerate([5e-3, 5e-4, 5e-5]):
        xt = subdivide(interval(2.0), 0.3)
        cases.append((perturbed_copy(xt, sc, 10 + k), xt, sc, "segment"))
    explicit = [(theta(1, 2, 3), 0.05), (theta(1, 1.5, 2), 0.04), (random_tree(6, seed=4), 0.05),
                (random_tree(7, seed=8), 0.06), (circle(1.0), 0.02), (circle(2.0), 0.03), (polygon(6), 0.02),
                (random_tree(5, seed=2), 0.03)]
    for k, (g, sc) in enumerate(explicit):
        cases.append((perturbed_copy(g, sc / 2, k), g, sc, "explicit"))
    return cases


def test_criterion_2_chaining_properties():
    t0 = time.perf_counter()
    cases = _chaining_cases()
    assert len(cases) == 20
    failures = []
    ratios = {"dis_h": 0.0, "dis_f": 0.0, "dis_f_tilde": 0.0, "round_trip": 0.0}
    for k, (X, Xt, scale, method) in enumerate(cases):
        ch = build_chaining(X, Xt, scale, method=method)
        e = ch.eps
        assert e == pytest.approx(4 * scale)
        c = ch.check()
        limits = {"dis_h": e / 2, "dis_f": 10 * (e / 4), "dis_f_tilde": 10 * (e / 4), "round_trip": e}
        for key, lim in limits.items():
            ratios[key] = max(ratios[key], c[key] / lim)
            if c[key] > lim + TOL:
                failures.append((k, method, key, c[key], lim))
    detail = "20 chainings (12 lattice, 8 explicit); worst value/limit " + ", ".join(
        f"{k} {v:.2f}" for k, v in ratios.items())
    _record(2, "chaining properties", not failures, detail + (f"; failures {failures}" if failures else ""), t0, 30)


def test_criterion_3_gh_oracle_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(33)
    mismatches = 0
    for _ in range(50):
        DA, DB = random_metric(rng, 4), random_metric(rng, 4)
        if finite_gh_bound(np.array(DA), np.array(DB), "exhaustive") != finite_gh(DA, DB):
            mismatches += 1
    bnb_mismatch = 0
    sizes = []
    for k in range(20):
        n = 4 + k % 3
        sizes.append(n)
        DA, DB = np.array(random_metric(rng, n)), np.array(random_metric(rng, n))
        _, v_bnb, exact_bnb = best_bijection(DA, DB, "bnb")
        _, v_ex, _ = best_bijection(DA, DB, "exhaustive")
        if not (exact_bnb and v_bnb == v_ex == min_bijection_distortion(DA.tolist(), DB.tolist())):
            bnb_mismatch += 1
    _record(3, "GH oracle equivalence", mismatches == 0 and bnb_mismatch == 0,
            f"50 four-point spaces, {mismatches} mismatches; 20 branch-and-bound cases (n {min(sizes)}-{max(sizes)}), "
            f"{bnb_mismatch} mismatches", t0)


@pytest.fixture(scope="module")
def transfer_sweep():
    t0 = time.perf_counter()
    report = run_transfer_experiment(load_config(CONFIGS / "transfer_interval.json"))
    return report, time.perf_counter() - t0


def test_criterion_4_transfer_bound(transfer_sweep):
    report, took = transfer_sweep
    t0 = time.perf_counter() - took  # charge the sweep itself to this criterion
    bad, parts = [], []
    for p in report["points"]:
        eps = p["eps"]
        assert "error" not in p, p
        bound = 0.1 + 48 * math.sqrt(eps)
        assert p["beta"] == pytest.approx(math.sqrt(eps))
        assert p["inner_certified"], "inner pursuer did not achieve alpha on X~"
        assert p["chaining_checks"]["ok"]
        worst = max(g["min_distance"] for g in p["games"])
        parts.append(f"eps {eps:.0e}: worst {worst:.4g} <= {bound:.4g}")
        bad += [(eps, g["evader"]) for g in p["games"] if g["min_distance"] > bound + TOL]
    games = sum(len(p["games"]) for p in report["points"])
    _record(4, "transfer bound", not bad and not report["summary"]["violated"],
            f"{games} games; " + "; ".join(parts), t0, 120)


def test_criterion_5_proof_inequalities(transfer_sweep):
    report, _ = transfer_sweep
    t0 = time.perf_counter()
    worst_m = max(g["pur_m_max_excess"] for p in report["points"] for g in p["games"])
    worst_l = max(g["pur_l_max_excess"] for p in report["points"] for g in p["games"])
    flags = all(g["pur_m_ok"] and g["pur_l_ok"] for p in report["points"] for g in p["games"])
    _record(5, "per-step proof inequalities", flags and worst_m <= TOL and worst_l <= TOL,
            f"max excess over beta + i dis: pur-m {worst_m:.3g}, pur-l {worst_l:.3g}", t0)


def test_criterion_6_no_spurious_capture_on_circle():
    t0 = time.perf_counter()
    g = circle(1.0)
    worst_drop = -math.inf
    count = 0
    for beta in (0.01, 0.03, 0.05, 0.07, 0.1, 0.2):
        for x in (0.0, 0.1, 0.37, 0.5, 0.81):
            rec = run_game(g, GreedyPursuer(g, beta), make_evader("flee", g, beta),
                           circle_arc_point(g, x), circle_arc_point(g, (x + 0.5) % 1.0), beta, 5.0)
            assert rec.check()
            worst_drop = max(worst_drop, rec.distances[0] - rec.min_distance)
            count += 1
    _record(6, "antipodal circle control", worst_drop <= 1e-9,
            f"{count} games (flee evader, T = 5), largest drop below the start {worst_drop:.3g}", t0)


def test_criterion_7_refinement():
    t0 = time.perf_counter()
    report = run_refinement_experiment(load_config(CONFIGS / "refine_circle.json"))
    rows = report["levels"]
    segs = [4, 8, 16, 32]
    ok = True
    parts = []
    for n, r in zip(segs, rows):
        # inscribed polygon of the unit-circumference circle: chord length
        seg = math.sin(math.pi / n) / math.pi
        assert r["max_edge"] == pytest.approx(seg)
        ok &= abs(r["alpha_n"] - 0.5) <= 2 * seg
        parts.append(f"n={n} alpha {r['alpha_n']:.4f} gh {r['gh_upper']:.4f}")
    ghs = [r["gh_upper"] for r in rows]
    mono = all(a > b for a, b in zip(ghs, ghs[1:]))
    _record(7, "refinement", bool(ok and mono and not report["summary"]["violated"]),
            "; ".join(parts) + f"; gh decreasing {mono}", t0)


def test_criterion_8_causality():
    t0 = time.perf_counter()
    rng = np.random.default_rng(808)
    X_t = subdivide(interval(1.0), 0.25)
    X = perturbed_copy(X_t, 1e-3, 0)
    ch = build_chaining(X, X_t, 1e-3)
    tb = transfer_beta(ch)
    graphs = [theta(1.0, 1.5, 2.0), circle(1.5), random_tree(6, seed=3), interval(2.0)]
    kinds = ["greedy", "transferred", "flee", "random-walk", "scripted", "maximin", "stationary"]
    failures = []
    for k in range(50):
        kind = kinds[k % len(kinds)]
        if kind == "transferred":
            g, beta = X, tb
        else:
            g, beta = graphs[k % len(graphs)], float(rng.uniform(0.1, 0.3))
        steps = 16
        cut = int(rng.integers(0, steps - 1))
        base = lipschitz_walk(g, random_graph_point(g, rng), beta, steps - 1, rng)
        other = base[: cut + 1] + lipschitz_walk(g, base[cut], beta, steps - 1 - cut, rng)[1:]
        own0 = random_graph_point(g, rng)
        script = lipschitz_walk(g, own0, beta, steps, rng)

        def make():
            if kind == "greedy":
                return GreedyPursuer(g, beta)
            if kind == "transferred":
                return TransferStrategy(ch, lambda Lt0: GreedyPursuer(ch.xt, beta), beta, 1.0, own0, alpha=0.1)
            return make_evader(kind, g, beta, seed=k, positions=script)

        a = play_against_fixed(make(), own0, base)
        b = play_against_fixed(make(), own0, other)
        moves = max(g.distance(p, q) for p, q in zip(a, a[1:]))
        if a[: cut + 2] != b[: cut + 2] or moves > beta + TOL:
            failures.append((k, kind, cut))
    _record(8, "causality", not failures,
            f"50 prefix-agreement tests over {', '.join(kinds)}; failures {failures}", t0)
