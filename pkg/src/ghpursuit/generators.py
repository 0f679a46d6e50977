"""Standard metric graphs used by experiments and tests."""
from __future__ import annotations

import math

import numpy as np

from .metric_graph import InputDomainError, MetricGraph

__all__ = ["GENERATORS", "generate", "interval", "circle", "polygon", "theta", "grid_disk", "torus_grid", "random_tree"]


def _positive(name, x):
    if not (isinstance(x, (int, float)) and x > 0 and math.isfinite(x)):
        raise InputDomainError(f"{name} must be a positive number, got {x!r}")
    return float(x)


def interval(length: float = 1.0) -> MetricGraph:
    return MetricGraph([0, 1], [(0, 1, _positive("length", length))])


def circle(circumference: float = 1.0) -> MetricGraph:
    """Two edges of half the circumference joining the same two vertices."""
    c = _positive("circumference", circumference)
    return MetricGraph([0, 1], [(0, 1, c / 2), (1, 0, c / 2)])


def polygon(n: int, circumference: float = 1.0) -> MetricGraph:
    """Regular n-gon inscribed in the circle of the given circumference (edges are chords)."""
    if not (isinstance(n, (int, np.integer)) and n >= 3):
        raise InputDomainError(f"polygon needs n >= 3, got {n!r}")
    r = _positive("circumference", circumference) / (2 * math.pi)
    chord = 2 * r * math.sin(math.pi / n)
    return MetricGraph(range(n), [(k, (k + 1) % n, chord) for k in range(n)])


def theta(l1: float = 1.0, l2: float = 2.0, l3: float = 3.0) -> MetricGraph:
    """Three parallel edges between vertices A and B."""
    return MetricGraph(["A", "B"], [("A", "B", _positive("l1", l1)), ("A", "B", _positive("l2", l2)),
                                    ("A", "B", _positive("l3", l3))])


def grid_disk(radius: float = 1.0, spacing: float = 0.1) -> MetricGraph:
    """Square lattice points within the disk, joined to their lattice neighbours."""
    radius = _positive("radius", radius)
    spacing = _positive("spacing", spacing)
    if spacing > radius:
        raise InputDomainError("spacing must not exceed the radius")
    k = int(math.floor(radius / spacing + 1e-9))
    pts = {(i, j) for i in range(-k, k + 1) for j in range(-k, k + 1)
           if math.hypot(i * spacing, j * spacing) <= radius + 1e-12}
    # keep the component of the centre
    comp = {(0, 0)}
    todo = [(0, 0)]
    while todo:
        i, j = todo.pop()
        for q in ((i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)):
            if q in pts and q not in comp:
                comp.add(q)
                todo.append(q)
    verts = sorted(comp)
    edges = [((i, j), q, spacing) for (i, j) in verts for q in ((i + 1, j), (i, j + 1)) if q in comp]
    return MetricGraph([f"{i},{j}" for i, j in verts], [(f"{a[0]},{a[1]}", f"{b[0]},{b[1]}", l) for a, b, l in edges])


def torus_grid(m: int = 4, n: int = 4, spacing: float = 0.25) -> MetricGraph:
    """m x n grid with wrap-around in both directions."""
    if not (isinstance(m, (int, np.integer)) and isinstance(n, (int, np.integer)) and m >= 2 and n >= 2):
        raise InputDomainError("torus grid needs m, n >= 2")
    spacing = _positive("spacing", spacing)
    vid = lambda i, j: i * n + j  # noqa: E731
    edges = []
    for i in range(m):
        for j in range(n):
            edges.append((vid(i, j), vid((i + 1) % m, j), spacing))
            edges.append((vid(i, j), vid(i, (j + 1) % n), spacing))
    return MetricGraph(range(m * n), edges)


def random_tree(n: int = 8, seed: int = 0, min_length: float = 0.2, max_length: float = 1.0) -> MetricGraph:
    """Random recursive tree: vertex k joins a uniformly chosen earlier vertex."""
    if not (isinstance(n, (int, np.integer)) and n >= 2):
        raise InputDomainError("random tree needs n >= 2")
    if not (0 < min_length <= max_length):
        raise InputDomainError("need 0 < min_length <= max_length")
    rng = np.random.default_rng(seed)
    edges = []
    for k in range(1, n):
        parent = int(rng.integers(k))
        edges.append((parent, k, float(rng.uniform(min_length, max_length))))
    return MetricGraph(range(n), edges)


GENERATORS = {
    "interval": interval,
    "circle": circle,
    "polygon": polygon,
    "theta": theta,
    "grid-disk": grid_disk,
    "torus-grid": torus_grid,
    "random-tree": random_tree,
}


def generate(kind: str, **params) -> MetricGraph:
    try:
        fn = GENERATORS[kind]
    except KeyError:
        raise InputDomainError(f"unknown generator {kind!r}; expected one of {sorted(GENERATORS)}") from None
    try:
        return fn(**params)
    except TypeError as exc:
        raise InputDomainError(f"bad parameters for {kind}: {exc}") from None
