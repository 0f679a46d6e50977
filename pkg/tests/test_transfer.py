import numpy as np
import pytest

from ghpursuit.chaining import build_chaining
from ghpursuit.experiments import perturbed_copy
from ghpursuit.game import run_game
from ghpursuit.generators import interval, random_tree
from ghpursuit.metric_graph import GraphPoint, InputDomainError, subdivide
from ghpursuit.pursuit import GreedyPursuer, Stationary, Strategy, StrategyProtocolError, make_evader, play_against_fixed
from ghpursuit.transfer import TransferStrategy, certify_transfer_bound, theorem_bound, transfer_beta

from oracles import lipschitz_walk, random_graph_point

TOL = 1e-7


@pytest.fixture(scope="module")
def identity_chaining():
    g = subdivide(interval(1.0), 0.25)
    return build_chaining(g, g, 1e-4)


@pytest.fixture(scope="module")
def tree_chaining():
    Xt = random_tree(6, seed=4)
    X = perturbed_copy(Xt, 0.01, seed=1)
    return build_chaining(X, Xt, 0.05, method="explicit")


def _inner(ch, beta):
    return lambda Lt0: GreedyPursuer(ch.xt, beta)


class Jumper(Strategy):
    name = "jumper"

    def __init__(self, graph, beta):
        self.graph, self.beta = graph, beta

    def step(self, own, opponent_prefix):
        return opponent_prefix[-1]


def test_transfer_beta_and_bound(identity_chaining):
    assert transfer_beta(identity_chaining) == pytest.approx(0.01)
    assert theorem_bound(0.1, 2.0, 1e-4) == pytest.approx(0.1 + 48 * 0.01)


@pytest.mark.parametrize("kind", ["flee", "random-walk", "stationary"])
def test_identity_chaining_tracks_direct_greedy(identity_chaining, kind):
    ch = identity_chaining
    g, beta = ch.x, 0.01
    L0, M0 = GraphPoint(0, 0.0), GraphPoint(3, 0.2)
    s = TransferStrategy(ch, _inner(ch, beta), beta, 2.0, L0, alpha=0.1)
    t = run_game(g, s, make_evader(kind, g, beta, seed=1), L0, M0, beta, 2.0)
    d = run_game(g, GreedyPursuer(g, beta), make_evader(kind, g, beta, seed=1), L0, M0, beta, 2.0)
    assert t.check()
    assert abs(t.min_distance - d.min_distance) <= 4 * beta


def test_stationary_evader_is_caught(identity_chaining):
    ch = identity_chaining
    beta = transfer_beta(ch)
    rep, games = certify_transfer_bound(ch, _inner(ch, beta), 0.1, 2.0,
                                        [("stationary", lambda: Stationary(ch.x, beta))],
                                        [(GraphPoint(0, 0.0), GraphPoint(3, 0.25))], return_games=True)
    (g,) = rep["games"]
    # within one lattice spacing plus one step of the evader
    assert g["min_distance"] <= ch.eps + beta
    assert g["pur_m_ok"] and g["pur_l_ok"] and g["lipschitz_ok"]
    assert not rep["summary"]["violated"]
    tg = games[0]
    assert len(tg.pur_m) == len(tg.pur_l) == tg.record.steps + 1


def test_explicit_chaining_proof_inequalities(tree_chaining):
    ch = tree_chaining
    beta = transfer_beta(ch)
    X = ch.x
    rng = np.random.default_rng(3)
    trials = [(random_graph_point(X, rng), random_graph_point(X, rng)) for _ in range(3)]
    suite = [("flee", lambda: make_evader("flee", X, beta)),
             ("random-walk", lambda: make_evader("random-walk", X, beta, seed=5))]
    rep = certify_transfer_bound(ch, _inner(ch, beta), 0.5, 1.0, suite, trials)
    assert len(rep["games"]) == 6
    for g in rep["games"]:
        assert g["pur_m_ok"] and g["pur_l_ok"], g
        assert g["pur_m_max_excess"] <= TOL and g["pur_l_max_excess"] <= TOL
        assert g["chain_at_tau_ok"]
        assert g["lipschitz_ok"]
    assert rep["dis_f"] <= 10 * ch.scale + TOL
    assert rep["dis_f_tilde"] <= 10 * ch.scale + TOL


def test_report_structure(identity_chaining):
    ch = identity_chaining
    beta = transfer_beta(ch)
    rep = certify_transfer_bound(ch, _inner(ch, beta), 0.1, 0.5,
                                 [("flee", lambda: make_evader("flee", ch.x, beta))],
                                 [(GraphPoint(0, 0.0), GraphPoint(3, 0.25))])
    assert set(rep["summary"]) == {"bound", "worst_min_distance", "violated"}
    assert rep["summary"]["bound"] == pytest.approx(theorem_bound(0.1, 0.5, ch.scale))
    assert rep["N"] == 50
    assert rep["beta"] == beta and rep["beta_override"] is False
    # the unsimplified chain is never looser than the closed form
    assert rep["proof_chain_bound"] <= rep["ceiling_chain_bound"] <= rep["theorem_bound"] + TOL
    for key in ("min_distance", "inner_min_distance", "tau", "pur_m_ok", "pur_l_ok", "violated"):
        assert key in rep["games"][0]


def test_beta_is_enforced(identity_chaining):
    ch = identity_chaining
    with pytest.raises(InputDomainError, match="beta"):
        TransferStrategy(ch, _inner(ch, 0.02), 0.02, 1.0, GraphPoint(0, 0.0), alpha=0.1)
    with pytest.warns(UserWarning, match="overridden"):
        s = TransferStrategy(ch, _inner(ch, 0.02), 0.02, 1.0, GraphPoint(0, 0.0), alpha=0.1, beta_override=True)
    assert s.warnings
    with pytest.warns(UserWarning, match="overridden"):
        rep = certify_transfer_bound(ch, _inner(ch, 0.02), 0.1, 0.2,
                                     [("stationary", lambda: Stationary(ch.x, 0.02))],
                                     [(GraphPoint(0, 0.0), GraphPoint(1, 0.1))], beta=0.02, beta_override=True)
    assert rep["beta_override"] is True


def test_alpha_and_eps_preconditions(identity_chaining):
    ch = identity_chaining
    beta = transfer_beta(ch)
    for alpha in (0.0, 1.0, 1.5, 0.005):  # 0.005^2 < 1e-4 breaks eps < alpha^2
        with pytest.raises(InputDomainError):
            TransferStrategy(ch, _inner(ch, beta), beta, 1.0, GraphPoint(0, 0.0), alpha=alpha)
    with pytest.warns(UserWarning, match="alpha"):
        TransferStrategy(ch, _inner(ch, beta), beta, 1.0, GraphPoint(0, 0.0))
    with pytest.raises(InputDomainError):
        TransferStrategy(ch, _inner(ch, beta), beta, 0.0, GraphPoint(0, 0.0), alpha=0.1)


def test_inadmissible_inner_step_raises(identity_chaining):
    ch = identity_chaining
    beta = transfer_beta(ch)
    s = TransferStrategy(ch, lambda Lt0: Jumper(ch.xt, beta), beta, 1.0, GraphPoint(0, 0.0), alpha=0.1)
    with pytest.raises(StrategyProtocolError, match="inner"):
        run_game(ch.x, s, Stationary(ch.x, beta), GraphPoint(0, 0.0), GraphPoint(3, 0.25), beta, 1.0)


def test_out_of_order_prefix_raises(identity_chaining):
    ch = identity_chaining
    beta = transfer_beta(ch)
    s = TransferStrategy(ch, _inner(ch, beta), beta, 1.0, GraphPoint(0, 0.0), alpha=0.1)
    with pytest.raises(StrategyProtocolError):
        s.step(GraphPoint(0, 0.0), [GraphPoint(0, 0.5), GraphPoint(0, 0.5)])


def test_inner_held_after_horizon(identity_chaining):
    ch = identity_chaining
    beta = transfer_beta(ch)
    s = TransferStrategy(ch, _inner(ch, beta), beta, 0.05, GraphPoint(0, 0.0), alpha=0.1)
    out = play_against_fixed(s, GraphPoint(0, 0.0), [GraphPoint(3, 0.25)] * 20)
    assert len(out) == 21
    assert s.Lt[5:] == [s.Lt[5]] * (len(s.Lt) - 5)


def test_transferred_strategy_is_causal(tree_chaining):
    ch = tree_chaining
    beta = transfer_beta(ch)
    X = ch.x
    rng = np.random.default_rng(0)
    for _ in range(5):
        k = int(rng.integers(1, 10))
        base = lipschitz_walk(X, random_graph_point(X, rng), beta, 12, rng)
        other = base[: k + 1] + lipschitz_walk(X, base[k], beta, 11 - k, rng)[1:]
        L0 = random_graph_point(X, rng)
        a = play_against_fixed(TransferStrategy(ch, _inner(ch, beta), beta, 3.0, L0, alpha=0.5), L0, base)
        b = play_against_fixed(TransferStrategy(ch, _inner(ch, beta), beta, 3.0, L0, alpha=0.5), L0, other)
        assert a[: k + 2] == b[: k + 2]
        assert max(X.distance(p, q) for p, q in zip(a, a[1:])) <= beta + TOL
