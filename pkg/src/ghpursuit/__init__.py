"""Pursuit-evasion on finite metric graphs and strategy transfer between nearby spaces."""
from .chaining import Chaining, ChainingError, build_chaining, eval_f, eval_f_tilde, load_chaining, save_chaining
from .game import GameRecord, capture_radius_estimate, run_game
from .generators import generate
from .metric_graph import (
    TOL,
    GeodesicPath,
    GraphPoint,
    InputDomainError,
    MetricGraph,
    dense_sample,
    distance,
    geodesic,
    load_graph,
    perturb_lengths,
    point_along,
    save_graph,
    subdivide,
)
from .nets import (
    Correspondence,
    LatticeNet,
    Net,
    build_eps_net,
    distortion_of,
    gh_bounds,
    gh_upper_bound,
    min_distortion_bijection,
    nearest_net_point,
)
from .pursuit import (
    Strategy,
    StrategyProtocolError,
    Trajectory,
    beta_pursuit_curve,
    beta_pursuit_step,
    greedy_pursuer,
    make_evader,
)
from .transfer import TransferStrategy, certify_transfer_bound, theorem_bound, transfer_strategy

__version__ = "0.1.0"
