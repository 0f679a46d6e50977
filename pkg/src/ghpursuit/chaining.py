"""Chainings: paired maps between two nearby spaces built from matched nets.

For a chaining with parameter ``eps`` between X and X~:

* ``net_x``, ``net_xt`` are eps-nets of X and X~ of equal size;
* ``h`` pairs ``net_xt[j]`` with ``net_x[h(j)]`` and distorts by at most eps/2;
* ``f(x~) = h(g~(x~))`` and ``f~(x) = h^-1(g(x))`` where ``g``, ``g~`` pick the
  nearest net point (lowest index on ties).

``build_chaining(X, X~, scale)`` targets spaces with d_GH <= scale and returns a
chaining with parameter ``4 * scale``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .metric_graph import TOL, GraphPoint, InputDomainError, MetricGraph, Sample, dense_sample
from .nets import (
    Correspondence,
    LatticeNet,
    Net,
    build_eps_net,
    distortion_of,
    sample_spacing,
    transport_net,
)
from .segment import SegmentChart, lattice_map_distortion

__all__ = [
    "Chaining",
    "ChainingError",
    "build_chaining",
    "eval_f",
    "eval_f_tilde",
    "save_chaining",
    "load_chaining",
    "chaining_from_dict",
]


class ChainingError(RuntimeError):
    """No qualifying bijection was found; carries the best distortion reached."""

    def __init__(self, message: str, best_distortion: float, coverage: float | None = None):
        super().__init__(message)
        self.best_distortion = best_distortion
        self.coverage = coverage


@dataclass
class Chaining:
    x: MetricGraph
    xt: MetricGraph
    net_x: Net
    net_xt: Net
    h: Correspondence  # source net_xt, target net_x
    eps: float
    scale: float
    # pair checks beyond this many sample points use a seeded subsample (a lower bound)
    max_pairs_points: int = 4000

    # -- maps ----------------------------------------------------------------

    def g_index(self, p: GraphPoint) -> int:
        return self.net_x.nearest_index(p)

    def gt_index(self, p: GraphPoint) -> int:
        return self.net_xt.nearest_index(p)

    def f(self, xt_point: GraphPoint) -> GraphPoint:
        return self.net_x.point(int(self.h.forward(self.gt_index(xt_point))))

    def f_tilde(self, x_point: GraphPoint) -> GraphPoint:
        return self.net_xt.point(int(self.h.backward(self.g_index(x_point))))

    def f_indices(self, sample_xt: Sample) -> np.ndarray:
        """Indices into ``net_x`` of the images of a sample of X~."""
        return np.asarray(self.h.forward(self.net_xt.nearest_indices(sample_xt)), dtype=np.int64)

    def f_tilde_indices(self, sample_x: Sample) -> np.ndarray:
        return np.asarray(self.h.backward(self.net_x.nearest_indices(sample_x)), dtype=np.int64)

    # -- measured quantities ---------------------------------------------------

    @property
    def is_lattice(self) -> bool:
        return isinstance(self.net_x, LatticeNet) and isinstance(self.net_xt, LatticeNet)

    def dis_h(self) -> float:
        return distortion_of(self.h)

    def _lattice_identity(self) -> bool:
        return self.is_lattice and self.h.pairing is None

    def dis_f(self, sample_xt: Sample | None = None) -> float:
        """Distortion of f, exact on lattice chainings, else measured on a sample of X~."""
        if self._lattice_identity():
            return lattice_map_distortion(self.net_xt.chart.length, self.net_x.chart.length, self.net_xt.intervals)
        if sample_xt is None:
            sample_xt = dense_sample(self.xt, sample_spacing(self.xt, self.scale))
        sample_xt = _cap(sample_xt, self.max_pairs_points)
        return _image_distortion(self.xt, sample_xt, self.net_x, self.f_indices(sample_xt))

    def dis_f_tilde(self, sample_x: Sample | None = None) -> float:
        if self._lattice_identity():
            return lattice_map_distortion(self.net_x.chart.length, self.net_xt.chart.length, self.net_x.intervals)
        if sample_x is None:
            sample_x = dense_sample(self.x, sample_spacing(self.x, self.scale))
        sample_x = _cap(sample_x, self.max_pairs_points)
        return _image_distortion(self.x, sample_x, self.net_xt, self.f_tilde_indices(sample_x))

    def validate(self, max_points: int = 200_000, seed: int = 0) -> dict:
        """:meth:`check` on dense samples, or on seeded random samples when those would be too large."""
        return self.check(_bounded_sample(self.x, self.scale, max_points, seed),
                          _bounded_sample(self.xt, self.scale, max_points, seed + 1))

    def check(self, sample_x: Sample | None = None, sample_xt: Sample | None = None) -> dict:
        """Recompute every chaining property on dense samples.

        Returned keys: ``dis_h``, ``g_max`` and ``gt_max`` (largest distance to the
        nearest net point), ``dis_f``, ``dis_f_tilde``, ``round_trip`` (largest
        distance from x~ to f~(f(x~))), and ``ok`` against this chaining's eps.
        """
        if sample_x is None:
            sample_x = dense_sample(self.x, sample_spacing(self.x, self.scale))
        if sample_xt is None:
            sample_xt = dense_sample(self.xt, sample_spacing(self.xt, self.scale))
        gi = self.net_x.nearest_indices(sample_x)
        gti = self.net_xt.nearest_indices(sample_xt)
        g_max = _max_dist(self.x, sample_x, self.net_x, gi)
        gt_max = _max_dist(self.xt, sample_xt, self.net_xt, gti)
        # f~ o f = g~ because f lands in net_x, where g is the identity
        back = self.h.backward(self.net_x.nearest_indices(_take(self.net_x, self.h.forward(gti))))
        round_trip = _max_dist(self.xt, sample_xt, self.net_xt, np.asarray(back, dtype=np.int64))
        try:
            dis_h = self.dis_h()
        except InputDomainError:
            dis_h = _sampled_distortion(self.h)
        out = {
            "eps": self.eps,
            "scale": self.scale,
            "dis_h": dis_h,
            "g_max": g_max,
            "gt_max": gt_max,
            "dis_f": self.dis_f(sample_xt),
            "dis_f_tilde": self.dis_f_tilde(sample_x),
            "round_trip": round_trip,
        }
        e = self.eps
        out["ok"] = bool(
            dis_h <= e / 2 + TOL
            and g_max <= e + TOL
            and gt_max <= e + TOL
            and out["dis_f"] <= 10 * self.scale + TOL
            and out["dis_f_tilde"] <= 10 * self.scale + TOL
            and round_trip <= e + TOL
        )
        return out

    def to_dict(self, include_graphs: bool = True) -> dict:
        out = {
            "eps": self.eps,
            "scale": self.scale,
            "net_x": self.net_x.to_dict(),
            "net_xt": self.net_xt.to_dict(),
            "pairing": "identity" if self.h.pairing is None else [[j, int(i)] for j, i in enumerate(self.h.pairing)],
            "dis_h": self.h.distortion,
        }
        if include_graphs:
            out["x"] = self.x.to_dict()
            out["xt"] = self.xt.to_dict()
        return out


def _bounded_sample(graph: MetricGraph, scale: float, max_points: int, seed: int) -> Sample:
    spacing = sample_spacing(graph, scale)
    if graph.total_length / spacing + graph.n_vertices <= max_points:
        return dense_sample(graph, spacing)
    rng = np.random.default_rng(seed)
    vp = [graph.vertex_point(i) for i in range(graph.n_vertices)]
    verts = Sample.from_points(vp)
    k = max_points - len(verts)
    el = graph.edge_length
    edges = rng.choice(graph.n_edges, size=k, p=el / el.sum())
    offs = rng.uniform(0.0, 1.0, size=k) * el[edges]
    return verts.concat(Sample(edges.astype(np.int64), offs))


def _cap(sample: Sample, limit: int, seed: int = 0) -> Sample:
    if len(sample) <= limit:
        return sample
    keep = np.sort(np.random.default_rng(seed).choice(len(sample), size=limit, replace=False))
    return Sample(sample.edges[keep], sample.offsets[keep])


def _image_distortion(graph: MetricGraph, sample: Sample, net: Net, idx: np.ndarray) -> float:
    """max |rho(a, b) - rho'(F a, F b)| over sample pairs, F given by net indices."""
    DA = graph.pairwise(sample)
    if isinstance(net, LatticeNet):
        c = np.minimum(idx * net.spacing, net.chart.length)
        DB = np.abs(c[:, None] - c[None, :])
    else:
        DB = net.distance_matrix()[np.ix_(idx, idx)]
    return float(np.abs(DA - DB).max())


def _take(net: Net, idx) -> Sample:
    idx = np.asarray(idx, dtype=np.int64)
    if isinstance(net, LatticeNet):
        return Sample.from_points(net.point(int(i)) for i in idx)
    return Sample(net.sample.edges[idx], net.sample.offsets[idx])


def _max_dist(graph: MetricGraph, sample: Sample, net: Net, idx: np.ndarray) -> float:
    if isinstance(net, LatticeNet):
        x = net.chart.coords(sample)
        c = np.minimum(idx * net.spacing, net.chart.length)
        return float(np.abs(x - c).max())
    targets = Sample(net.sample.edges[idx], net.sample.offsets[idx])
    d = [graph._dist(int(a), float(b), int(c), float(e))
         for a, b, c, e in zip(sample.edges, sample.offsets, targets.edges, targets.offsets)]
    return float(max(d)) if d else 0.0


def _sampled_distortion(corr: Correspondence, pairs: int = 200_000, seed: int = 0) -> float:
    """Lower bound on the distortion from randomly drawn pairs (for pairings too large to scan)."""
    rng = np.random.default_rng(seed)
    n = len(corr.source)
    i = rng.integers(n, size=pairs)
    j = rng.integers(n, size=pairs)
    a, b = corr.source, corr.target
    ca = np.minimum(i * a.spacing, a.chart.length), np.minimum(j * a.spacing, a.chart.length)
    pi, pj = corr.forward(i), corr.forward(j)
    cb = np.minimum(pi * b.spacing, b.chart.length), np.minimum(pj * b.spacing, b.chart.length)
    return float(np.abs(np.abs(ca[0] - ca[1]) - np.abs(cb[0] - cb[1])).max())


def build_chaining(X: MetricGraph, Xt: MetricGraph, scale: float, method: str = "auto", **kw) -> Chaining:
    """Chaining with parameter ``4 * scale`` between X and X~ (d_GH(X, X~) <= scale expected).

    The net of X~ is a ``2 * scale``-net; the net of X is a least-distortion copy of
    it placed in X. Construction fails with :class:`ChainingError` unless the copy
    distorts by at most ``2 * scale`` and covers X within ``4 * scale``.

    ``method``: ``"segment"`` uses uniform arc-length lattices (both graphs must be
    paths), ``"explicit"`` the general search, ``"auto"`` picks segment when possible.
    """
    if not (scale > 0):
        raise InputDomainError("scale must be positive")
    eps = 4.0 * scale
    cx, cxt = SegmentChart.of(X), SegmentChart.of(Xt)
    if method == "auto":
        method = "segment" if (cx is not None and cxt is not None) else "explicit"
    if method == "segment":
        if cx is None or cxt is None:
            raise InputDomainError("segment chaining needs two path graphs")
        K = max(1, math.ceil(cxt.length / (2.0 * eps / 2.0) - 1e-12))
        net_xt = LatticeNet(Xt, cxt, K, eps=eps)
        net_x = LatticeNet(X, cx, K, eps=eps)
        h = Correspondence(net_xt, net_x, None, abs(cx.length - cxt.length))
        best = h.distortion
        cover = net_x.radius
    elif method == "explicit":
        net_xt = build_eps_net(Xt, 2.0 * scale)
        if X == Xt:
            net_x = Net(X, net_xt.sample, radius=net_xt.radius, eps=eps)
            best = 0.0
        else:
            spacing = sample_spacing(X, scale)
            net_x, best = transport_net(net_xt, X, spacing, **kw)
        net_x.eps = eps
        net_xt.eps = eps
        h = Correspondence(net_xt, net_x, None, best)
        cover = net_x.radius
    else:
        raise InputDomainError(f"unknown chaining method {method!r}")
    if best > 2.0 * scale + TOL or cover > eps + TOL:
        raise ChainingError(
            f"no net bijection with distortion <= {2 * scale:.3g} and coverage <= {eps:.3g} "
            f"(best distortion {best:.6g}, coverage {cover:.6g})",
            best, cover,
        )
    return Chaining(X, Xt, net_x, net_xt, h, eps, scale)


def eval_f(ch: Chaining, xt_point: GraphPoint) -> GraphPoint:
    return ch.f(xt_point)


def eval_f_tilde(ch: Chaining, x_point: GraphPoint) -> GraphPoint:
    return ch.f_tilde(x_point)


def _net_from_dict(graph: MetricGraph, d: dict) -> Net:
    if d["kind"] == "lattice":
        chart = SegmentChart.of(graph)
        if chart is None:
            raise InputDomainError("lattice net on a non-path graph")
        return LatticeNet(graph, chart, int(d["count"]) - 1, eps=d.get("eps"))
    pts = d["points"]
    s = Sample(np.array([p[0] for p in pts], dtype=np.int64), np.array([p[1] for p in pts], dtype=np.float64))
    return Net(graph, s, radius=d.get("radius"), eps=d.get("eps"))


def chaining_from_dict(d: dict, x: MetricGraph | None = None, xt: MetricGraph | None = None) -> Chaining:
    x = MetricGraph.from_dict(d["x"]) if x is None else x
    xt = MetricGraph.from_dict(d["xt"]) if xt is None else xt
    net_x = _net_from_dict(x, d["net_x"])
    net_xt = _net_from_dict(xt, d["net_xt"])
    if d["pairing"] == "identity":
        pairing = None
    else:
        pairing = np.zeros(len(net_xt), dtype=np.int64)
        for j, i in d["pairing"]:
            pairing[j] = i
    h = Correspondence(net_xt, net_x, pairing, float(d["dis_h"]))
    return Chaining(x, xt, net_x, net_xt, h, float(d["eps"]), float(d["scale"]))


def save_chaining(ch: Chaining, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(ch.to_dict(), fh)


def load_chaining(path: str | Path) -> Chaining:
    with open(path) as fh:
        return chaining_from_dict(json.load(fh))
