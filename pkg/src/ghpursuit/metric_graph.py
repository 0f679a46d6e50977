"""Finite metric graphs as compact geodesic spaces.

A point of the space is an ``(edge, offset)`` pair; vertices are points too,
stored canonically on their lowest-id incident edge. Distances go through
cached all-pairs vertex distances with the two partial-edge stubs attached.
"""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Hashable, Iterable, Iterator, NamedTuple, Sequence

import numpy as np

from . import kernels

__all__ = [
    "TOL",
    "InputDomainError",
    "GraphPoint",
    "GeodesicPath",
    "MetricGraph",
    "Sample",
    "distance",
    "geodesic",
    "point_along",
    "subdivide",
    "perturb_lengths",
    "dense_sample",
    "walk_endpoints",
    "load_graph",
    "save_graph",
]

# absolute tolerance for every metric assertion in the package
TOL = 1e-9
# relative slack used when deciding that two path lengths tie
_TIE = 1e-11


class InputDomainError(ValueError):
    """An argument lies outside the domain an operation accepts."""


@dataclass(frozen=True, order=True)
class GraphPoint:
    edge: int
    offset: float

    def __repr__(self) -> str:
        return f"GraphPoint({self.edge}, {self.offset!r})"


class Sample(NamedTuple):
    """Finite point set of a graph in array form."""

    edges: np.ndarray
    offsets: np.ndarray

    def __len__(self) -> int:
        return int(self.edges.shape[0])

    def point(self, i: int) -> GraphPoint:
        return GraphPoint(int(self.edges[i]), float(self.offsets[i]))

    def points(self) -> list[GraphPoint]:
        return [GraphPoint(int(e), float(o)) for e, o in zip(self.edges, self.offsets)]

    @classmethod
    def from_points(cls, points: Iterable[GraphPoint]) -> "Sample":
        pts = list(points)
        return cls(
            np.array([p.edge for p in pts], dtype=np.int64),
            np.array([p.offset for p in pts], dtype=np.float64),
        )

    def concat(self, other: "Sample") -> "Sample":
        return Sample(np.concatenate([self.edges, other.edges]), np.concatenate([self.offsets, other.offsets]))


@dataclass(frozen=True)
class GeodesicPath:
    """Isometrically parameterized shortest path.

    ``segments`` are ``(edge, from_offset, to_offset)`` runs along single edges,
    in travel order; ``waypoints`` are the vertex ids passed through.
    """

    graph: "MetricGraph"
    start: GraphPoint
    end: GraphPoint
    length: float
    segments: tuple[tuple[int, float, float], ...]
    waypoints: tuple[Hashable, ...]

    @property
    def edge_sequence(self) -> tuple[int, ...]:
        return tuple(s[0] for s in self.segments)

    def __call__(self, s: float) -> GraphPoint:
        return point_along(self, s)


class _Target(NamedTuple):
    vertex: int  # vertex index, or -1 for an interior point
    edge: int
    offset: float


class MetricGraph:
    """Connected graph with positive edge lengths and its shortest-path metric.

    Immutable after construction. Vertex ids are sorted when they are mutually
    comparable, so index 0 is the lowest id. Edge ids are positions in ``edges``.
    Parallel edges and loops are allowed.
    """

    def __init__(self, vertices: Iterable[Hashable], edges: Iterable[Sequence]):
        verts = list(vertices)
        if not verts:
            raise InputDomainError("graph needs at least one vertex")
        if len(set(verts)) != len(verts):
            raise InputDomainError("duplicate vertex ids")
        try:
            verts = sorted(verts)
        except TypeError:
            pass
        self.vertices: tuple[Hashable, ...] = tuple(verts)
        self._index = {v: i for i, v in enumerate(self.vertices)}

        eu, ev, el = [], [], []
        for k, edge in enumerate(edges):
            if isinstance(edge, dict):
                u, v, length = edge["u"], edge["v"], edge["length"]
            else:
                u, v, length = edge
            if u not in self._index or v not in self._index:
                raise InputDomainError(f"edge {k} references unknown vertex ({u!r}, {v!r})")
            length = float(length)
            if not (length > 0.0) or not math.isfinite(length):
                raise InputDomainError(f"edge {k} has nonpositive or non-finite length {length!r}")
            eu.append(self._index[u])
            ev.append(self._index[v])
            el.append(length)
        if not el and len(self.vertices) > 1:
            raise InputDomainError("graph is disconnected")
        if not el:
            raise InputDomainError("graph needs at least one edge")

        self.edge_u = np.array(eu, dtype=np.int64)
        self.edge_v = np.array(ev, dtype=np.int64)
        self.edge_length = np.array(el, dtype=np.float64)
        for arr in (self.edge_u, self.edge_v, self.edge_length):
            arr.setflags(write=False)

        inc: list[list[int]] = [[] for _ in self.vertices]
        for e, (u, v) in enumerate(zip(eu, ev)):
            inc[u].append(e)
            if v != u:
                inc[v].append(e)
        self._incident = tuple(tuple(sorted(x)) for x in inc)
        if any(not x for x in self._incident):
            raise InputDomainError("graph is disconnected (isolated vertex)")
        if not self._connected():
            raise InputDomainError("graph is disconnected")

        self._eu = eu
        self._ev = ev
        self._el = el
        self._apsp: np.ndarray | None = None
        self._apsp_rows: list[list[float]] | None = None
        self._diameter: float | None = None

    # -- structure ---------------------------------------------------------

    def _connected(self) -> bool:
        seen = {0}
        todo = deque([0])
        while todo:
            w = todo.popleft()
            for e in self._incident[w]:
                for x in (self.edge_u[e], self.edge_v[e]):
                    if x not in seen:
                        seen.add(int(x))
                        todo.append(int(x))
        return len(seen) == len(self.vertices)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self._el)

    @property
    def edges(self) -> list[tuple[Hashable, Hashable, float]]:
        return [(self.vertices[u], self.vertices[v], l) for u, v, l in zip(self._eu, self._ev, self._el)]

    @property
    def total_length(self) -> float:
        return float(self.edge_length.sum())

    def incident(self, vertex_index: int) -> tuple[int, ...]:
        return self._incident[vertex_index]

    def degree(self, vertex_index: int) -> int:
        return sum(2 if self._eu[e] == self._ev[e] else 1 for e in self._incident[vertex_index])

    def vertex_index(self, vid: Hashable) -> int:
        try:
            return self._index[vid]
        except KeyError:
            raise InputDomainError(f"unknown vertex {vid!r}") from None

    @property
    def apsp(self) -> np.ndarray:
        """All-pairs vertex distances, computed on first use."""
        if self._apsp is None:
            n = self.n_vertices
            W = np.full((n, n), np.inf)
            np.fill_diagonal(W, 0.0)
            for u, v, l in zip(self._eu, self._ev, self._el):
                if l < W[u, v]:
                    W[u, v] = l
                    W[v, u] = l
            D = kernels.floyd_warshall(W)
            D = np.minimum(D, D.T)
            D.setflags(write=False)
            self._apsp = D
            self._apsp_rows = D.tolist()
        return self._apsp

    def _rows(self) -> list[list[float]]:
        if self._apsp_rows is None:
            self.apsp
        return self._apsp_rows

    # -- points ------------------------------------------------------------

    def vertex_point(self, vertex_index: int) -> GraphPoint:
        e = self._incident[vertex_index][0]
        return GraphPoint(e, 0.0 if self._eu[e] == vertex_index else self._el[e])

    def point_at_vertex(self, vid: Hashable) -> GraphPoint:
        return self.vertex_point(self.vertex_index(vid))

    def point(self, edge: int, offset: float) -> GraphPoint:
        return self.canonical(GraphPoint(edge, offset))

    def canonical(self, p: GraphPoint) -> GraphPoint:
        e = p.edge
        if not (0 <= e < len(self._el)):
            raise InputDomainError(f"edge id {e} out of range [0, {len(self._el)})")
        l = self._el[e]
        a = float(p.offset)
        if not (-1e-12 <= a <= l + 1e-12):
            raise InputDomainError(f"offset {a!r} outside [0, {l!r}] on edge {e}")
        if a <= 0.0:
            return self.vertex_point(self._eu[e])
        if a >= l:
            return self.vertex_point(self._ev[e])
        return GraphPoint(int(e), a)

    def vertex_at(self, p: GraphPoint) -> int:
        """Vertex index if ``p`` (canonical) sits on a vertex, else -1."""
        if p.offset == 0.0:
            return self._eu[p.edge]
        if p.offset == self._el[p.edge]:
            return self._ev[p.edge]
        return -1

    # -- metric ------------------------------------------------------------

    def distance(self, p: GraphPoint, q: GraphPoint) -> float:
        p = self.canonical(p)
        q = self.canonical(q)
        return self._dist(p.edge, p.offset, q.edge, q.offset)

    def _dist(self, e1: int, o1: float, e2: int, o2: float) -> float:
        D = self._rows()
        l1 = self._el[e1]
        l2 = self._el[e2]
        r1 = D[self._eu[e1]]
        s1 = D[self._ev[e1]]
        u2 = self._eu[e2]
        v2 = self._ev[e2]
        b2 = l2 - o2
        b1 = l1 - o1
        # offsets are summed first so the result is symmetric in floating point
        best = min((o1 + o2) + r1[u2], (o1 + b2) + r1[v2], (b1 + o2) + s1[u2], (b1 + b2) + s1[v2])
        if e1 == e2:
            best = min(best, abs(o1 - o2))
        return best

    def pairwise(self, a: Sample, b: Sample | None = None) -> np.ndarray:
        """Distance matrix between two samples (or within one)."""
        if b is None:
            b = a
        D = self.apsp
        out = kernels.point_distances(
            D, self.edge_u, self.edge_v, self.edge_length,
            np.ascontiguousarray(a.edges), np.ascontiguousarray(a.offsets),
            np.ascontiguousarray(b.edges), np.ascontiguousarray(b.offsets),
        )
        if b is a:
            out = np.minimum(out, out.T)
            np.fill_diagonal(out, 0.0)
        return out

    def diameter(self) -> float:
        """Exact diameter, maximizing the piecewise-linear distance over every edge pair."""
        if self._diameter is None:
            D = self.apsp
            u, v, l = self.edge_u, self.edge_v, self.edge_length
            same = np.minimum(l, 0.5 * (l + D[u, v]))
            best = float(same.max())
            if self.n_edges > 1:
                U, Up = u[:, None], u[None, :]
                V, Vp = v[:, None], v[None, :]
                L, Lp = l[:, None], l[None, :]
                duu, duv, dvu, dvv = D[U, Up], D[U, Vp], D[V, Up], D[V, Vp]
                # lines in the offset a on the first edge with slopes +1, -1, 0
                c_pos = np.minimum(np.minimum(duu + Lp, duv + Lp), 0.5 * (duu + duv + Lp))
                c_neg = np.minimum(np.minimum(L + dvu + Lp, L + dvv + Lp), 0.5 * (2 * L + dvu + dvv + Lp))
                c_flat = np.minimum(0.5 * (duu + dvv + L + Lp), 0.5 * (dvu + duv + L + Lp))
                a_star = np.clip(0.5 * (c_neg - c_pos), 0.0, L)
                val = np.minimum(np.minimum(a_star + c_pos, c_neg - a_star), c_flat)
                np.fill_diagonal(val, -np.inf)
                best = max(best, float(val.max()))
            self._diameter = best
        return self._diameter

    # -- geodesics ---------------------------------------------------------

    def _target(self, q: GraphPoint) -> _Target:
        return _Target(self.vertex_at(q), q.edge, q.offset)

    def _vertex_to_target(self, x: int, t: _Target) -> float:
        row = self._rows()[x]
        if t.vertex >= 0:
            return row[t.vertex]
        return min(row[self._eu[t.edge]] + t.offset, row[self._ev[t.edge]] + self._el[t.edge] - t.offset)

    def _tail(self, w: int, r: float, t: _Target, tol: float) -> Iterator[tuple[int, float, float]]:
        """Lexicographically smallest shortest route from vertex ``w`` to the target."""
        for _ in range(self.n_vertices + 2):
            if t.vertex >= 0 and w == t.vertex:
                return
            choice = None
            for e in self._incident[w]:
                u, v, l = self._eu[e], self._ev[e], self._el[e]
                ends = []
                if u == w:
                    ends.append((0.0, l, v))
                if v == w:
                    ends.append((l, 0.0, u))
                terminal = None
                traverse = None
                for fo, to, x in ends:
                    if t.vertex < 0 and t.edge == e and terminal is None:
                        if abs(abs(t.offset - fo) - r) <= tol:
                            terminal = (e, fo, t.offset)
                    if traverse is None and l + self._vertex_to_target(x, t) <= r + tol:
                        traverse = (e, fo, to, x)
                if terminal is not None:
                    yield terminal
                    return
                if traverse is not None:
                    choice = traverse
                    break
            if choice is None:
                raise RuntimeError("geodesic reconstruction lost the shortest path (tolerance too tight?)")
            e, fo, to, x = choice
            yield (e, fo, to)
            r -= self._el[e]
            w = x
        raise RuntimeError("geodesic reconstruction did not terminate")

    def _segments(self, p: GraphPoint, q: GraphPoint, d: float) -> list[tuple[int, float, float]]:
        if d == 0.0 or p == q:
            return []
        tol = _TIE * max(1.0, d)
        t = self._target(q)
        w = self.vertex_at(p)
        if w >= 0:
            return list(self._tail(w, d, t, tol))
        e, a = p.edge, p.offset
        l = self._el[e]
        if q.edge == e and abs(a - q.offset) <= d + tol:
            return [(e, a, q.offset)]
        u, v = self._eu[e], self._ev[e]
        options = []
        if a + self._vertex_to_target(u, t) <= d + tol:
            options.append([(e, a, 0.0)] + list(self._tail(u, d - a, t, tol)))
        if (l - a) + self._vertex_to_target(v, t) <= d + tol:
            options.append([(e, a, l)] + list(self._tail(v, d - (l - a), t, tol)))
        if not options:
            raise RuntimeError("no shortest exit found from interior point")
        # min() keeps the first (toward offset 0) on equal edge sequences
        return min(options, key=lambda segs: [s[0] for s in segs])

    def geodesic(self, p: GraphPoint, q: GraphPoint) -> GeodesicPath:
        p = self.canonical(p)
        q = self.canonical(q)
        d = self._dist(p.edge, p.offset, q.edge, q.offset)
        segs = self._segments(p, q, d)
        way = []
        w0 = self.vertex_at(p)
        if w0 >= 0:
            way.append(self.vertices[w0])
        for e, _, to in segs:
            if to == 0.0:
                way.append(self.vertices[self._eu[e]])
            elif to == self._el[e]:
                way.append(self.vertices[self._ev[e]])
        return GeodesicPath(self, p, q, d, tuple(segs), tuple(way))

    def step_toward(self, p: GraphPoint, q: GraphPoint, s: float) -> GraphPoint:
        """Point at distance ``s`` from ``p`` on the canonical geodesic to ``q``; ``q`` if it is closer."""
        p = self.canonical(p)
        q = self.canonical(q)
        d = self._dist(p.edge, p.offset, q.edge, q.offset)
        if d <= s:
            return q
        return _walk_segments(self, self._segments(p, q, d), s, q)

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "vertices": list(self.vertices),
            "edges": [{"u": u, "v": v, "length": l} for u, v, l in self.edges],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MetricGraph":
        try:
            return cls(data["vertices"], data["edges"])
        except KeyError as exc:
            raise InputDomainError(f"graph record missing field {exc}") from None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MetricGraph):
            return NotImplemented
        return self.vertices == other.vertices and self._eu == other._eu and self._ev == other._ev and self._el == other._el

    def __hash__(self) -> int:
        return hash((self.vertices, tuple(self._el)))

    def __repr__(self) -> str:
        return f"MetricGraph(|V|={self.n_vertices}, |E|={self.n_edges}, length={self.total_length:.6g})"


def _walk_segments(graph: MetricGraph, segs, s: float, end: GraphPoint) -> GraphPoint:
    cum = 0.0
    for e, fo, to in segs:
        seg = abs(to - fo)
        if s <= cum + seg:
            off = fo + (s - cum) if to >= fo else fo - (s - cum)
            off = min(max(off, 0.0), graph._el[e])
            return graph.canonical(GraphPoint(e, off))
        cum += seg
    return end


# -- functional surface ------------------------------------------------------


def distance(graph: MetricGraph, p: GraphPoint, q: GraphPoint) -> float:
    return graph.distance(p, q)


def geodesic(graph: MetricGraph, p: GraphPoint, q: GraphPoint) -> GeodesicPath:
    return graph.geodesic(p, q)


def point_along(path: GeodesicPath, s: float) -> GraphPoint:
    if not (-TOL <= s <= path.length + TOL):
        raise InputDomainError(f"parameter {s!r} outside [0, {path.length!r}]")
    if s <= 0.0:
        return path.start
    if s >= path.length:
        return path.end
    return _walk_segments(path.graph, path.segments, s, path.end)


def _fresh_ids(graph: MetricGraph, count: int, tag: str) -> list[Hashable]:
    if all(isinstance(v, (int, np.integer)) and not isinstance(v, bool) for v in graph.vertices):
        start = int(max(graph.vertices)) + 1
        return list(range(start, start + count))
    taken = set(graph.vertices)
    out = []
    k = 0
    while len(out) < count:
        cand = f"{tag}{k}"
        if cand not in taken:
            out.append(cand)
        k += 1
    return out


def subdivide(graph: MetricGraph, max_edge_length: float, return_map: bool = False):
    """Split every edge longer than ``max_edge_length`` into equal pieces.

    Only degree-2 vertices are inserted, so the metric is unchanged. With
    ``return_map`` also returns a function carrying points of ``graph`` to the
    corresponding points of the result.
    """
    if not (max_edge_length > 0):
        raise InputDomainError("max_edge_length must be positive")
    pieces = []
    for l in graph._el:
        k = max(1, math.ceil(l / max_edge_length - 1e-12))
        while l / k > max_edge_length:
            k += 1
        pieces.append(k)
    ids = _fresh_ids(graph, sum(k - 1 for k in pieces), "s")
    it = iter(ids)
    new_edges = []
    first_edge = []
    for e, k in enumerate(pieces):
        u = graph.vertices[graph._eu[e]]
        v = graph.vertices[graph._ev[e]]
        l = graph._el[e]
        first_edge.append(len(new_edges))
        chain = [u] + [next(it) for _ in range(k - 1)] + [v]
        for j in range(k):
            new_edges.append((chain[j], chain[j + 1], l / k))
    result = MetricGraph(list(graph.vertices) + ids, new_edges)
    if not return_map:
        return result

    def carry(p: GraphPoint) -> GraphPoint:
        p = graph.canonical(p)
        k = pieces[p.edge]
        piece = graph._el[p.edge] / k
        j = min(int(p.offset // piece), k - 1)
        return result.canonical(GraphPoint(first_edge[p.edge] + j, min(p.offset - j * piece, piece)))

    return result, carry


def perturb_lengths(graph: MetricGraph, magnitude: float, seed: int) -> MetricGraph:
    """Shift each edge length by an independent uniform amount in [-magnitude, magnitude]."""
    shortest = float(graph.edge_length.min())
    if not (0.0 <= magnitude < shortest):
        raise InputDomainError(f"magnitude must lie in [0, {shortest!r}) (shortest edge), got {magnitude!r}")
    rng = np.random.default_rng(seed)
    delta = rng.uniform(-magnitude, magnitude, size=graph.n_edges)
    edges = [(u, v, l + float(d)) for (u, v, l), d in zip(graph.edges, delta)]
    return MetricGraph(graph.vertices, edges)


def dense_sample(graph: MetricGraph, spacing: float) -> Sample:
    """All vertices, then interior edge points spaced at most ``spacing`` apart."""
    if not (spacing > 0):
        raise InputDomainError("spacing must be positive")
    es, os_ = [], []
    for i in range(graph.n_vertices):
        p = graph.vertex_point(i)
        es.append(p.edge)
        os_.append(p.offset)
    for e, l in enumerate(graph._el):
        k = math.ceil(l / spacing - 1e-12)
        for j in range(1, k):
            es.append(e)
            os_.append(l * j / k)
    return Sample(np.array(es, dtype=np.int64), np.array(os_, dtype=np.float64))


def walk_endpoints(graph: MetricGraph, p: GraphPoint, length: float, limit: int = 64) -> list[GraphPoint]:
    """Endpoints of non-backtracking walks of the given length starting at ``p``.

    Walks stopped by a dead end contribute that vertex. At most ``limit``
    endpoints are produced, in a deterministic order (lower edge ids first).
    """
    p = graph.canonical(p)
    out: list[GraphPoint] = []
    seen = set()

    def emit(q: GraphPoint) -> None:
        q = graph.canonical(q)
        if q not in seen:
            seen.add(q)
            out.append(q)

    def from_vertex(w: int, budget: float, came_by: int) -> None:
        if len(out) >= limit:
            return
        if budget <= 0.0:
            emit(graph.vertex_point(w))
            return
        moved = False
        for e in graph._incident[w]:
            u, v, l = graph._eu[e], graph._ev[e], graph._el[e]
            if e == came_by and u != v:
                continue
            if u == w:
                moved = True
                along(e, 0.0, +1, budget)
            if v == w:
                moved = True
                along(e, l, -1, budget)
        if not moved:
            emit(graph.vertex_point(w))

    def along(e: int, a: float, sign: int, budget: float) -> None:
        if len(out) >= limit:
            return
        l = graph._el[e]
        room = l - a if sign > 0 else a
        if budget <= room:
            emit(GraphPoint(e, a + sign * budget))
            return
        w = graph._ev[e] if sign > 0 else graph._eu[e]
        from_vertex(w, budget - room, e)

    w = graph.vertex_at(p)
    if w >= 0:
        from_vertex(w, length, -1)
    else:
        along(p.edge, p.offset, -1, length)
        along(p.edge, p.offset, +1, length)
    return out


def load_graph(path: str | Path) -> MetricGraph:
    with open(path) as fh:
        return MetricGraph.from_dict(json.load(fh))


def save_graph(graph: MetricGraph, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(graph.to_dict(), fh, indent=1)
