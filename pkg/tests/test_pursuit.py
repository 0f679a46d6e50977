import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ghpursuit.generators import circle, interval, theta
from ghpursuit.metric_graph import GraphPoint, InputDomainError
from ghpursuit.pursuit import (
    EVADER_KINDS,
    FleeEvader,
    GreedyPursuer,
    MaximinEvader,
    RandomWalkEvader,
    StrategyProtocolError,
    Trajectory,
    beta_pursuit_curve,
    beta_pursuit_step,
    horizon_steps,
    make_evader,
    play_against_fixed,
)

from oracles import circle_arc_point, lemma2_instances, lipschitz_walk, random_graph_point

TOL = 1e-7


# -- horizon ----------------------------------------------------------------------


def test_horizon_steps():
    assert horizon_steps(1.0, 0.1) == 10  # 1.0 / 0.1 is 10.000000000000002 in floats
    assert horizon_steps(1.0, 0.3) == 4
    assert horizon_steps(2.0, 1e-4) == 20000
    assert horizon_steps(0.01, 1.0) == 1
    with pytest.raises(InputDomainError):
        horizon_steps(0.0, 0.1)


# -- beta-pursuit -------------------------------------------------------------------


def test_step_moves_exactly_beta(unit_interval):
    assert beta_pursuit_step(unit_interval, GraphPoint(0, 0.0), GraphPoint(0, 0.5), 0.1) == GraphPoint(0, 0.1)


def test_step_jumps_when_close(unit_interval):
    assert beta_pursuit_step(unit_interval, GraphPoint(0, 0.0), GraphPoint(0, 0.08), 0.1) == GraphPoint(0, 0.08)
    assert beta_pursuit_step(unit_interval, GraphPoint(0, 0.4), GraphPoint(0, 0.4), 0.1) == GraphPoint(0, 0.4)


def test_step_on_circle_uses_shorter_arc(unit_circle):
    L = circle_arc_point(unit_circle, 0.05)
    M = circle_arc_point(unit_circle, 0.85)
    nxt = beta_pursuit_step(unit_circle, L, M, 0.1)
    assert unit_circle.distance(nxt, circle_arc_point(unit_circle, 0.95)) == pytest.approx(0, abs=1e-12)


def test_step_through_a_vertex(theta123):
    L = GraphPoint(0, 0.9)  # edge 0 has length 1
    M = GraphPoint(1, 1.5)
    nxt = beta_pursuit_step(theta123, L, M, 0.3)
    assert theta123.distance(L, nxt) == pytest.approx(0.3, abs=1e-12)
    assert theta123.distance(nxt, M) == pytest.approx(theta123.distance(L, M) - 0.3, abs=1e-12)


def test_step_rejects_nonpositive_beta(unit_interval):
    with pytest.raises(InputDomainError):
        beta_pursuit_step(unit_interval, GraphPoint(0, 0), GraphPoint(0, 1), 0.0)


def test_curve_against_fixed_tuple(unit_interval):
    targets = [GraphPoint(0, x) for x in (0.5, 0.5, 0.45, 0.3)]
    tr = beta_pursuit_curve(unit_interval, GraphPoint(0, 0.0), targets, 0.2)
    assert [round(p.offset, 12) for p in tr.positions] == [0.0, 0.2, 0.4, 0.45, 0.3]
    assert tr.is_lipschitz()
    with pytest.raises(InputDomainError):
        beta_pursuit_curve(unit_interval, GraphPoint(0, 0.0), [], 0.2)


def test_recursion_inequality_randomized():
    for g, L0, targets, beta, delta in lemma2_instances(100, seed=11):
        tr = beta_pursuit_curve(g, L0, targets, beta)
        rho0 = g.distance(tr[0], targets[0])
        for i, m in enumerate(targets):
            assert g.distance(tr[i], m) <= beta + i * delta * beta + rho0 + TOL
        assert tr.max_step() <= beta + TOL


@given(seed=st.integers(0, 10_000), beta=st.floats(0.01, 0.5))
def test_pursuit_of_a_fixed_point_closes_in(seed, beta):
    g = theta(1.0, 1.5, 2.0)
    rng = np.random.default_rng(seed)
    L, M = random_graph_point(g, rng), random_graph_point(g, rng)
    d0 = g.distance(L, M)
    tr = beta_pursuit_curve(g, L, [M] * (int(d0 / beta) + 2), beta)
    ds = [g.distance(p, M) for p in tr.positions]
    assert all(b <= max(a - beta, 0.0) + 1e-9 for a, b in zip(ds, ds[1:]))
    assert ds[-1] == 0.0


# -- trajectories -------------------------------------------------------------------------


def test_trajectory_csv_round_trip(tmp_path, theta123):
    rng = np.random.default_rng(1)
    pos = lipschitz_walk(theta123, GraphPoint(0, 0.5), 0.2, 30, rng)
    tr = Trajectory(theta123, 0.2, pos)
    path = tmp_path / "t.csv"
    tr.to_csv(path)
    header = path.read_text().splitlines()[0]
    assert header == "step,time,edge,offset"
    back = Trajectory.from_csv(path, theta123, 0.2)
    assert back.positions == tr.positions
    assert np.array_equal(back.steps(), tr.steps())


def test_trajectory_lipschitz_flag(unit_interval):
    ok = Trajectory(unit_interval, 0.1, [GraphPoint(0, 0.0), GraphPoint(0, 0.1), GraphPoint(0, 0.15)])
    bad = Trajectory(unit_interval, 0.1, [GraphPoint(0, 0.0), GraphPoint(0, 0.3)])
    assert ok.is_lipschitz() and ok.max_step() == pytest.approx(0.1)
    assert not bad.is_lipschitz()


# -- greedy pursuer --------------------------------------------------------------------------


def test_greedy_uses_latest_evader_position(unit_interval):
    p = GreedyPursuer(unit_interval, 0.1)
    prefix = [GraphPoint(0, 0.9), GraphPoint(0, 0.05)]
    assert p.step(GraphPoint(0, 0.0), prefix) == GraphPoint(0, 0.05)


# -- evaders ------------------------------------------------------------------------------------


def _hand_flee_interval(L, M, beta, steps, length=1.0):
    """Flee rule on [0, length] written out with plain arithmetic."""
    Ls, Ms = [L], [M]
    for _ in range(steps):
        l, m = Ls[-1], Ms[-1]
        pred = m if abs(m - l) <= beta else l + beta * np.sign(m - l)
        cands = sorted({min(length, m + beta), max(0.0, m - beta), m})
        dist = [abs(c - pred) for c in cands]
        m_next = cands[int(np.argmax(dist))]  # ties: lowest offset (argmax takes the first)
        l_next = m if abs(m - l) <= beta else l + beta * np.sign(m - l)
        Ls.append(l_next)
        Ms.append(m_next)
    return Ls, Ms


def test_flee_on_interval_matches_hand_rolled(unit_interval):
    beta = 0.1
    L, M = [GraphPoint(0, 0.0)], [GraphPoint(0, 0.3)]
    p, e = GreedyPursuer(unit_interval, beta), FleeEvader(unit_interval, beta)
    for i in range(15):
        l, m = p.step(L[i], M), e.step(M[i], L)
        L.append(l)
        M.append(m)
    hl, hm = _hand_flee_interval(0.0, 0.3, beta, 15)
    assert [q.offset for q in M] == pytest.approx(hm, abs=1e-12)
    assert [q.offset for q in L] == pytest.approx(hl, abs=1e-12)


def test_flee_keeps_separation_on_circle(unit_circle):
    beta = 0.05
    L, M = [circle_arc_point(unit_circle, 0.0)], [circle_arc_point(unit_circle, 0.25)]
    p, e = GreedyPursuer(unit_circle, beta), FleeEvader(unit_circle, beta)
    for i in range(100):
        L.append(p.step(L[i], M))
        M.append(e.step(M[i], L[: i + 1]))
    ds = [unit_circle.distance(a, b) for a, b in zip(L, M)]
    assert min(ds) == pytest.approx(0.25, abs=1e-9)


def test_literal_flee_loses_ground_on_antipodal_circle(unit_circle):
    # fleeing the current position leaves the evader in place at the antipode,
    # and the pursuer's step then costs it beta
    beta = 0.05
    L0, M0 = circle_arc_point(unit_circle, 0.0), circle_arc_point(unit_circle, 0.5)
    e = FleeEvader(unit_circle, beta, predict=False)
    p = GreedyPursuer(unit_circle, beta)
    L1, M1 = p.step(L0, [M0]), e.step(M0, [L0])
    assert unit_circle.distance(L1, M1) == pytest.approx(0.5 - beta, abs=1e-12)
    e2 = FleeEvader(unit_circle, beta)
    M1b = e2.step(M0, [L0])
    assert unit_circle.distance(L1, M1b) == pytest.approx(0.5, abs=1e-12)


def test_scripted_evader_holds_last(unit_interval):
    pts = [GraphPoint(0, 0.5), GraphPoint(0, 0.55), GraphPoint(0, 0.6)]
    e = make_evader("scripted", unit_interval, 0.1, positions=pts)
    out = play_against_fixed(e, pts[0], [GraphPoint(0, 0.0)] * 5)
    assert out == pts + [pts[-1]] * 3


def test_random_walk_is_seeded_and_admissible(theta123):
    opp = [GraphPoint(0, 0.0)] * 40
    a = play_against_fixed(RandomWalkEvader(theta123, 0.2, seed=4), GraphPoint(1, 1.0), opp)
    b = play_against_fixed(RandomWalkEvader(theta123, 0.2, seed=4), GraphPoint(1, 1.0), opp)
    c = play_against_fixed(RandomWalkEvader(theta123, 0.2, seed=5), GraphPoint(1, 1.0), opp)
    assert a == b != c
    assert Trajectory(theta123, 0.2, a).is_lipschitz()


def test_maximin_escapes_greedy_on_circle():
    g = circle(1.0)
    beta = 0.1
    e, p = MaximinEvader(g, beta, horizon=4), GreedyPursuer(g, beta)
    L, M = [circle_arc_point(g, 0.0)], [circle_arc_point(g, 0.5)]
    for i in range(30):
        L.append(p.step(L[i], M))
        M.append(e.step(M[i], L[: i + 1]))
    assert Trajectory(g, beta, M).is_lipschitz()
    # from the antipode every evader move looks equally good against the grid
    # pursuer, so it may concede one step before running; after that it holds
    ds = [g.distance(a, b) for a, b in zip(L, M)]
    assert min(ds) >= 0.5 - beta - 1e-9
    assert ds[-1] >= 0.5 - beta - 1e-9


def test_maximin_limits():
    with pytest.raises(InputDomainError):
        MaximinEvader(interval(1.0), 0.1, horizon=0)
    with pytest.raises(InputDomainError):
        MaximinEvader(interval(100.0), 0.1)


def test_make_evader_kinds(unit_interval):
    for kind in EVADER_KINDS:
        params = {"positions": [GraphPoint(0, 0.5)]} if kind == "scripted" else {}
        assert make_evader(kind, unit_interval, 0.1, **params).name == kind
    with pytest.raises(InputDomainError, match="unknown evader"):
        make_evader("teleport", unit_interval, 0.1)


# -- causality -----------------------------------------------------------------------------------


@pytest.mark.parametrize("kind", ["greedy", "flee", "random-walk", "maximin", "stationary"])
def test_outputs_depend_only_on_the_prefix(kind, theta123):
    beta = 0.25
    rng = np.random.default_rng(7)
    for trial in range(5):
        k = int(rng.integers(1, 12))
        base = lipschitz_walk(theta123, random_graph_point(theta123, rng), beta, 14, rng)
        other = base[: k + 1] + lipschitz_walk(theta123, base[k], beta, 13 - k, rng)[1:]
        own0 = random_graph_point(theta123, rng)

        def make():
            if kind == "greedy":
                return GreedyPursuer(theta123, beta)
            return make_evader(kind, theta123, beta, seed=trial)

        a = play_against_fixed(make(), own0, base)
        b = play_against_fixed(make(), own0, other)
        # moves through step k+1 see only opponent entries 0..k
        assert a[: k + 2] == b[: k + 2]
        assert Trajectory(theta123, beta, a).is_lipschitz()


def test_protocol_error_message():
    err = StrategyProtocolError("pursuer", 3, 0.5, 0.1)
    assert "step 3" in str(err) and err.displacement == 0.5
