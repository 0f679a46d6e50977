"""Epsilon-nets, bijections between nets, and Gromov-Hausdorff bounds."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .metric_graph import TOL, GraphPoint, InputDomainError, MetricGraph, Sample, dense_sample
from .segment import SegmentChart

__all__ = [
    "Net",
    "LatticeNet",
    "Correspondence",
    "GHEstimate",
    "build_eps_net",
    "covering_radius",
    "nearest_net_point",
    "distortion_of",
    "min_distortion_bijection",
    "best_bijection",
    "finite_gh_bound",
    "transport_net",
    "gh_bounds",
    "gh_upper_bound",
    "sample_spacing",
]

EXACT_LIMIT = 9
# transport_net holds a candidates x candidates distance matrix
MAX_TRANSPORT_CANDIDATES = 8000
# ties in nearest-point maps are resolved to the lowest index within this slack
_NEAR_TIE = 1e-12


def sample_spacing(graph: MetricGraph, eps: float) -> float:
    """Resolution used for every "for all points" check at scale ``eps``."""
    return min(eps / 4.0, float(graph.edge_length.min()) / 4.0)


def covering_radius(graph: MetricGraph, points: Sample) -> float:
    """Exact sup over the whole graph of the distance to the nearest of ``points``.

    On one edge the distance to the set is the distance, along a line, to the
    nearest "source": the points lying on that edge plus two virtual sources
    just outside each end, at the set's distance from the end vertex.
    """
    verts = Sample.from_points(graph.vertex_point(i) for i in range(graph.n_vertices))
    to_vertex = graph.pairwise(points, verts).min(axis=0)
    worst = 0.0
    by_edge: dict[int, list[float]] = {}
    for e, o in zip(points.edges.tolist(), points.offsets.tolist()):
        by_edge.setdefault(e, []).append(o)
    for e in range(graph.n_edges):
        l = graph._el[e]
        src = [-to_vertex[graph._eu[e]], l + to_vertex[graph._ev[e]]] + by_edge.get(e, [])
        src.sort()
        for p, q in zip(src, src[1:]):
            lo, hi = max(p, 0.0), min(q, l)
            if lo > hi:
                continue
            x = min(max(0.5 * (p + q), lo), hi)
            worst = max(worst, min(x - p, q - x))
    return float(worst)


class Net:
    """Finite set of distinct points of ``graph`` within ``radius`` of every point."""

    def __init__(self, graph: MetricGraph, points: Sample, radius: float | None = None, eps: float | None = None):
        self.graph = graph
        self.sample = Sample(np.asarray(points.edges, dtype=np.int64), np.asarray(points.offsets, dtype=np.float64))
        self.radius = covering_radius(graph, self.sample) if radius is None else float(radius)
        self.eps = self.radius if eps is None else float(eps)
        self._dm: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.sample)

    def point(self, i: int) -> GraphPoint:
        return self.sample.point(i)

    @property
    def points(self) -> list[GraphPoint]:
        return self.sample.points()

    def distance_matrix(self) -> np.ndarray:
        if self._dm is None:
            self._dm = self.graph.pairwise(self.sample)
        return self._dm

    def nearest_indices(self, query: Sample) -> np.ndarray:
        d = self.graph.pairwise(query, self.sample)
        dmin = d.min(axis=1, keepdims=True)
        return np.argmax(d <= dmin + _NEAR_TIE, axis=1).astype(np.int64)

    def nearest_index(self, p: GraphPoint) -> int:
        p = self.graph.canonical(p)
        return int(self.nearest_indices(Sample.from_points([p]))[0])

    def to_dict(self) -> dict:
        return {
            "kind": "explicit",
            "eps": self.eps,
            "radius": self.radius,
            "points": [[int(e), float(o)] for e, o in zip(self.sample.edges, self.sample.offsets)],
        }


class LatticeNet(Net):
    """Uniform arc-length lattice on a path graph; points stay implicit."""

    def __init__(self, graph: MetricGraph, chart: SegmentChart, intervals: int, eps: float | None = None):
        self.graph = graph
        self.chart = chart
        self.intervals = int(intervals)
        self.spacing = chart.length / self.intervals
        self.radius = 0.5 * self.spacing
        self.eps = self.radius if eps is None else float(eps)
        self._dm = None
        self._sample: Sample | None = None

    def __len__(self) -> int:
        return self.intervals + 1

    def coord(self, i: int) -> float:
        return i * self.spacing if i < self.intervals else self.chart.length

    def point(self, i: int) -> GraphPoint:
        return self.chart.point(self.coord(i))

    @property
    def sample(self) -> Sample:
        if self._sample is None:
            if len(self) > 2_000_000:
                raise MemoryError(f"refusing to materialize a lattice of {len(self)} points")
            self._sample = Sample.from_points(self.point(i) for i in range(len(self)))
        return self._sample

    def distance_matrix(self) -> np.ndarray:
        if self._dm is None:
            c = np.minimum(np.arange(len(self)) * self.spacing, self.chart.length)
            self._dm = np.abs(c[:, None] - c[None, :])
        return self._dm

    def index_of_coord(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        k = np.clip(np.floor(x / self.spacing), 0, self.intervals).astype(np.int64)
        up = np.minimum(k + 1, self.intervals)
        ck = np.minimum(k * self.spacing, self.chart.length)
        cu = np.minimum(up * self.spacing, self.chart.length)
        return np.where(np.abs(x - ck) <= np.abs(cu - x) + _NEAR_TIE, k, up)

    def nearest_indices(self, query: Sample) -> np.ndarray:
        return self.index_of_coord(self.chart.coords(query))

    def nearest_index(self, p: GraphPoint) -> int:
        return int(self.index_of_coord(self.chart.coord(self.graph.canonical(p))))

    def to_dict(self) -> dict:
        return {"kind": "lattice", "eps": self.eps, "radius": self.radius, "count": len(self)}


def build_eps_net(graph: MetricGraph, eps: float, spacing: float | None = None) -> Net:
    """Farthest-point net seeded at the lowest-id vertex.

    Selection runs on a dense sample; it stops once every sample point is within
    ``eps - spacing/2`` of the net, which puts every point of the graph within
    ``eps``. The stored radius is the exact covering radius.
    """
    if not (eps > 0):
        raise InputDomainError("eps must be positive")
    seed_point = graph.vertex_point(0)
    seed = Sample.from_points([seed_point])
    if covering_radius(graph, seed) <= eps:
        return Net(graph, seed, eps=eps)
    spacing = sample_spacing(graph, eps) if spacing is None else spacing
    s = dense_sample(graph, spacing)
    chosen, _ = kernels.farthest_point_sample(
        graph.apsp, graph.edge_u, graph.edge_v, graph.edge_length,
        s.edges, s.offsets, 0, eps - 0.5 * spacing, len(s),
    )
    return Net(graph, Sample(s.edges[chosen], s.offsets[chosen]), eps=eps)


def nearest_net_point(net: Net, p: GraphPoint) -> GraphPoint:
    return net.point(net.nearest_index(p))


@dataclass(frozen=True)
class Correspondence:
    """Bijection ``source[i] -> target[pairing[i]]``; ``pairing=None`` means the identity."""

    source: Net
    target: Net
    pairing: np.ndarray | None
    distortion: float
    exact: bool = False
    inverse_pairing: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if len(self.source) != len(self.target):
            raise InputDomainError(f"nets differ in size: {len(self.source)} vs {len(self.target)}")
        if self.pairing is not None and self.inverse_pairing is None:
            p = np.asarray(self.pairing, dtype=np.int64)
            inv = np.full(len(p), -1, dtype=np.int64)
            inv[p] = np.arange(len(p))
            if (inv < 0).any():
                raise InputDomainError("pairing is not a bijection")
            object.__setattr__(self, "pairing", p)
            object.__setattr__(self, "inverse_pairing", inv)

    def forward(self, i):
        return i if self.pairing is None else self.pairing[i]

    def backward(self, j):
        return j if self.pairing is None else self.inverse_pairing[j]

    def pairing_array(self) -> np.ndarray:
        return np.arange(len(self.source)) if self.pairing is None else self.pairing


def _lattice_pair(a: Net, b: Net) -> bool:
    return isinstance(a, LatticeNet) and isinstance(b, LatticeNet) and a.intervals == b.intervals


def distortion_of(corr: Correspondence) -> float:
    """Max over source pairs of the change in distance, recomputed from the nets."""
    a, b = corr.source, corr.target
    if len(a) != len(b):
        raise InputDomainError("nets differ in size")
    if _lattice_pair(a, b):
        ca = np.minimum(np.arange(len(a)) * a.spacing, a.chart.length)
        p = corr.pairing_array()
        cb = np.minimum(p * b.spacing, b.chart.length)
        steps = np.diff(p)
        if corr.pairing is None or (steps > 0).all():
            d = ca - cb
            return float(d.max() - d.min())
        if (steps < 0).all():
            d = ca + cb
            return float(d.max() - d.min())
        if len(a) > 20_000:
            raise InputDomainError("exact distortion of a non-monotone pairing this large is not supported")
    return float(kernels.map_distortion(a.distance_matrix(), b.distance_matrix(), corr.pairing_array()))


def _profile_anchors(DA: np.ndarray, DB: np.ndarray, k: int, rng: np.random.Generator) -> list[int]:
    """Targets for source point 0, best sorted-distance-profile match first."""
    pa = np.sort(DA[0])
    pb = np.sort(DB, axis=1)
    score = np.abs(pb - pa[None, :]).max(axis=1)
    order = list(np.lexsort((np.arange(len(score)), score)))
    anchors = [int(i) for i in order[:k]]
    while len(anchors) < min(k, DB.shape[0]):
        c = int(rng.integers(DB.shape[0]))
        if c not in anchors:
            anchors.append(c)
    return anchors


def _heuristic(DA, DB, restarts: int, seed: int, rounds: int) -> tuple[np.ndarray, float]:
    rng = np.random.default_rng(seed)
    best_perm, best_val = None, np.inf
    for anchor in _profile_anchors(DA, DB, restarts, rng):
        assign, _ = kernels.greedy_extend(DA, DB, anchor)
        assign, val = kernels.local_search(DA, DB, assign, rounds)
        if val < best_val:
            best_perm, best_val = assign, val
    return best_perm, float(best_val)


def _exhaustive(DA, DB) -> tuple[np.ndarray, float]:
    n = DA.shape[0]
    if n > 10:
        raise InputDomainError("exhaustive search is limited to 10 points")
    best_perm, best_val = np.arange(n), np.inf
    iu = np.triu_indices(n, 1)
    da = DA[iu]
    for chunk in _chunks(itertools.permutations(range(n)), 50_000):
        P = np.array(chunk, dtype=np.int64)
        if n < 2:
            vals = np.zeros(len(P))
        else:
            vals = np.abs(DB[P[:, iu[0]], P[:, iu[1]]] - da[None, :]).max(axis=1)
        k = int(np.argmin(vals))
        if vals[k] < best_val:
            best_val, best_perm = float(vals[k]), P[k].copy()
    return best_perm, best_val


def _chunks(it, size):
    buf = []
    for x in it:
        buf.append(x)
        if len(buf) == size:
            yield buf
            buf = []
    if buf:
        yield buf


def best_bijection(DA: np.ndarray, DB: np.ndarray, method: str = "auto", exact_limit: int = EXACT_LIMIT,
                   restarts: int = 20, seed: int = 0, rounds: int = 200) -> tuple[np.ndarray, float, bool]:
    """Low-distortion bijection between two finite metric spaces given as matrices.

    ``method``: ``"exhaustive"`` (permutation scan), ``"bnb"`` (branch and bound),
    ``"heuristic"`` (greedy seeding + local search), or ``"auto"`` (bnb up to
    ``exact_limit`` points, heuristic above). Returns ``(perm, distortion, exact)``.
    """
    DA = np.ascontiguousarray(DA, dtype=np.float64)
    DB = np.ascontiguousarray(DB, dtype=np.float64)
    n = DA.shape[0]
    if DB.shape[0] != n:
        raise InputDomainError(f"spaces differ in size: {n} vs {DB.shape[0]}")
    if n == 0:
        return np.zeros(0, dtype=np.int64), 0.0, True
    if n == 1:
        return np.zeros(1, dtype=np.int64), 0.0, True
    if method == "auto":
        method = "bnb" if n <= exact_limit else "heuristic"
    if method == "exhaustive":
        perm, val = _exhaustive(DA, DB)
        return perm, val, True
    perm, val = _heuristic(DA, DB, restarts, seed, rounds)
    if method == "heuristic":
        return perm, val, False
    if method != "bnb":
        raise InputDomainError(f"unknown method {method!r}")
    perm, val = kernels.branch_and_bound(DA, DB, perm, val)
    return np.asarray(perm), float(val), True


def min_distortion_bijection(net_a: Net, net_b: Net, method: str = "auto", **kw) -> Correspondence:
    if len(net_a) != len(net_b):
        raise InputDomainError(f"nets differ in size: {len(net_a)} vs {len(net_b)}")
    if _lattice_pair(net_a, net_b):
        return Correspondence(net_a, net_b, None, abs(net_a.chart.length - net_b.chart.length), exact=False)
    perm, val, exact = best_bijection(net_a.distance_matrix(), net_b.distance_matrix(), method, **kw)
    return Correspondence(net_a, net_b, perm, val, exact)


def finite_gh_bound(DA: np.ndarray, DB: np.ndarray, method: str = "exhaustive") -> float:
    """Half the least bijection distortion between two equal-size finite spaces.

    Every bijection is a correspondence, so this bounds d_GH from above; it is
    the usual brute-force quantity for small equal-size spaces.
    """
    return 0.5 * best_bijection(DA, DB, method)[1]


def transport_net(net: Net, target: MetricGraph, spacing: float, restarts: int = 20, seed: int = 0,
                  rounds: int = 200) -> tuple[Net, float]:
    """Place a copy of ``net`` in ``target`` with least distortion found.

    Candidates are the points of a dense sample of ``target``. Each restart fixes
    the first net point at one candidate (best eccentricity matches first, the
    lowest-id vertex always included), extends greedily, then runs local search.
    Returns the placed net (pairing is index-to-index) and its distortion.
    """
    cand = dense_sample(target, spacing)
    if len(cand) > MAX_TRANSPORT_CANDIDATES:
        raise InputDomainError(
            f"explicit placement needs {len(cand)} candidate points (limit {MAX_TRANSPORT_CANDIDATES}); "
            "use a coarser scale or the segment method for path graphs"
        )
    DC = target.pairwise(cand)
    DA = net.distance_matrix()
    n = len(net)
    if n > len(cand):
        raise InputDomainError("target sample smaller than the net; refine the spacing")
    ecc_src = float(net.graph.pairwise(Sample.from_points([net.point(0)]),
                                       dense_sample(net.graph, spacing)).max())
    ecc = DC.max(axis=1)
    order = np.lexsort((np.arange(len(cand)), np.abs(ecc - ecc_src)))
    anchors = [0] + [int(c) for c in order if c != 0][: max(restarts - 1, 0)]
    best_assign, best_val = None, np.inf
    for anchor in anchors:
        assign, _ = kernels.greedy_extend(DA, DC, anchor)
        assign, val = kernels.local_search(DA, DC, assign, rounds)
        if val < best_val - 1e-15:
            best_assign, best_val = assign, float(val)
        if best_val == 0.0:
            break
    placed = Net(target, Sample(cand.edges[best_assign], cand.offsets[best_assign]))
    return placed, best_val


@dataclass
class GHEstimate:
    lower: float
    upper: float
    distortion: float
    radius_x: float
    radius_y: float
    direction: str


def gh_bounds(X: MetricGraph, Y: MetricGraph, net_radius: float, **kw) -> GHEstimate:
    """Certified bracket on d_GH(X, Y) at the given net resolution.

    Upper bound: with a bijection h between an r_X-net of X and an r_Y-net of
    Y of distortion d, relate every x to every y with rho(x, a) <= r_X and
    rho(y, h(a)) <= r_Y for a common net point a. That correspondence has
    distortion at most d + 2 r_X + 2 r_Y, so d_GH <= d/2 + r_X + r_Y. The same
    data gives a max(d + 2 r_X, r_Y)-isometry, hence d_GH <= 2 max(d + 2 r_X, r_Y);
    the smaller number is kept. Both directions are tried.
    Lower bound: |diam X - diam Y| / 2.
    """
    lower = 0.5 * abs(X.diameter() - Y.diameter())
    best = None
    for name, A, B in (("x->y", X, Y), ("y->x", Y, X)):
        net = build_eps_net(A, net_radius)
        spacing = min(sample_spacing(B, net_radius), net_radius / 8.0)
        placed, d = transport_net(net, B, spacing, **kw)
        ra, rb = net.radius, placed.radius
        up = min(0.5 * d + ra + rb, 2.0 * max(d + 2.0 * ra, rb))
        if name == "x->y":
            est = GHEstimate(lower, up, d, ra, rb, name)
        else:
            est = GHEstimate(lower, up, d, rb, ra, name)
        if best is None or est.upper < best.upper:
            best = est
    best.upper = max(best.upper, lower)
    return best


def gh_upper_bound(X: MetricGraph, Y: MetricGraph, net_radius: float, **kw) -> float:
    return gh_bounds(X, Y, net_radius, **kw).upper
