"""Arc-length charts for graphs isometric to a segment.

A path graph's metric is ``|x - y|`` in arc length, which lets nets,
nearest-point maps and distortions be handled in closed form instead of
through distance matrices. This is what makes nets with millions of points
usable.
"""
from __future__ import annotations

import bisect

import numpy as np

from .metric_graph import GraphPoint, MetricGraph, Sample

__all__ = ["SegmentChart", "lattice_map_distortion"]


class SegmentChart:
    """Isometry between a path graph and ``[0, length]``, starting at its lowest-index leaf."""

    def __init__(self, graph: MetricGraph, order: list[int], forward: list[bool]):
        self.graph = graph
        self._order = order
        self._forward = np.zeros(graph.n_edges, dtype=bool)
        self._start = np.zeros(graph.n_edges)
        starts = []
        x = 0.0
        for e, fwd in zip(order, forward):
            self._forward[e] = fwd
            self._start[e] = x
            starts.append(x)
            x += graph._el[e]
        self._starts = starts
        self.length = x

    @classmethod
    def of(cls, graph: MetricGraph) -> "SegmentChart | None":
        """Chart for ``graph`` if it is a simple path, else ``None``."""
        n = graph.n_vertices
        if n < 2 or graph.n_edges != n - 1:
            return None
        if any(u == v for u, v in zip(graph._eu, graph._ev)):
            return None
        degs = [graph.degree(i) for i in range(n)]
        if max(degs) > 2:
            return None
        w = degs.index(1)
        order, forward = [], []
        prev = -1
        for _ in range(n - 1):
            nxt = [e for e in graph.incident(w) if e != prev]
            if len(nxt) != 1:
                return None
            e = nxt[0]
            fwd = graph._eu[e] == w
            order.append(e)
            forward.append(fwd)
            w = graph._ev[e] if fwd else graph._eu[e]
            prev = e
        return cls(graph, order, forward)

    @classmethod
    def of_cycle(cls, graph: MetricGraph) -> "SegmentChart | None":
        """Arc-length parameterisation of a cycle graph from vertex 0 along its lowest edge.

        Not an isometry (the metric wraps around); used to place points by arc length.
        """
        n = graph.n_vertices
        if graph.n_edges != n or any(graph.degree(i) != 2 for i in range(n)):
            return None
        w, prev = 0, -1
        order, forward, seen = [], [], set()
        for _ in range(n):
            nxt = [e for e in sorted(set(graph.incident(w))) if e != prev and e not in seen]
            if not nxt:
                return None
            e = nxt[0]
            fwd = graph._eu[e] == w
            order.append(e)
            forward.append(fwd)
            seen.add(e)
            w = graph._ev[e] if fwd else graph._eu[e]
            prev = e
        if w != 0:
            return None
        return cls(graph, order, forward)

    def coord(self, p: GraphPoint) -> float:
        e = p.edge
        return float(self._start[e] + (p.offset if self._forward[e] else self.graph._el[e] - p.offset))

    def coords(self, sample: Sample) -> np.ndarray:
        e = sample.edges
        local = np.where(self._forward[e], sample.offsets, self.graph.edge_length[e] - sample.offsets)
        return self._start[e] + local

    def point(self, x: float) -> GraphPoint:
        x = min(max(float(x), 0.0), self.length)
        k = min(bisect.bisect_right(self._starts, x) - 1, len(self._order) - 1)
        e = self._order[k]
        local = min(x - self._starts[k], self.graph._el[e])
        off = local if self._forward[e] else self.graph._el[e] - local
        return self.graph.canonical(GraphPoint(e, off))


def lattice_map_distortion(src_length: float, dst_length: float, intervals: int) -> float:
    """Exact distortion of nearest-lattice-point projection composed with the index pairing.

    Source and destination are segments carrying uniform lattices with the same
    number of ``intervals``; a source point goes to its nearest lattice index and
    then to the destination lattice point of that index. The map is monotone, so
    its distortion is the spread of ``x - f(x)``; the extremes sit in the cells
    0, 1, K-1 and K.
    """
    K = int(intervals)
    s = src_length / K
    t = dst_length / K
    hi = -np.inf
    lo = np.inf
    for k in sorted({0, 1, max(K - 1, 0), K}):
        if k > K:
            continue
        cell_hi = src_length if k == K else (k + 0.5) * s
        cell_lo = 0.0 if k == 0 else (k - 0.5) * s
        hi = max(hi, cell_hi - k * t)
        lo = min(lo, cell_lo - k * t)
    return float(hi - lo)
