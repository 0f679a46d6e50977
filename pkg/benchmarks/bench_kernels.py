"""Time the numba kernels against their numpy counterparts.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--size 400]

The numba column includes a warm-up call outside the timed loop, so it shows
steady-state speed, not compile time.
"""
import argparse
import time

import numpy as np

from ghpursuit import kernels as K
from ghpursuit.generators import random_tree, theta
from ghpursuit.metric_graph import dense_sample


def _best(fn, repeat):
    fn()  # warm-up / compile
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def _cases(size, rng):
    g = random_tree(40, seed=1)
    args = (g.apsp, g.edge_u, g.edge_v, g.edge_length)
    s = dense_sample(g, g.edge_length.sum() / size)
    n = 120
    W = np.full((n, n), np.inf)
    np.fill_diagonal(W, 0)
    for _ in range(4 * n):
        i, j = rng.integers(n, size=2)
        W[i, j] = W[j, i] = rng.uniform(0.1, 2)
    th = theta(1, 2, 3)
    sa = dense_sample(th, 0.03)
    DA = th.pairwise(sa)
    idx = rng.integers(len(sa), size=len(sa))
    D7 = th.pairwise(dense_sample(th, 0.9))[:7, :7]
    DC = th.pairwise(dense_sample(th, 0.1))
    init = np.arange(len(D7))
    v0 = K.np_map_distortion(D7, D7[::-1, ::-1], init)
    greedy0 = K.np_greedy_extend(D7, DC, 0)[0]
    return {
        "floyd_warshall": (lambda: K.nb_floyd_warshall(W.copy()), lambda: K.np_floyd_warshall(W.copy())),
        "point_distances": (lambda: K.nb_point_distances(*args, s.edges, s.offsets, s.edges, s.offsets),
                            lambda: K.np_point_distances(*args, s.edges, s.offsets, s.edges, s.offsets)),
        "farthest_point_sample": (
            lambda: K.nb_farthest_point_sample(*args, s.edges, s.offsets, 0, 0.05, len(s)),
            lambda: K.np_farthest_point_sample(*args, s.edges, s.offsets, 0, 0.05, len(s))),
        "map_distortion": (lambda: K.nb_map_distortion(DA, DA, idx), lambda: K.np_map_distortion(DA, DA, idx)),
        "branch_and_bound": (lambda: K.nb_branch_and_bound(D7, D7[::-1, ::-1], init, v0),
                             lambda: K.np_branch_and_bound(D7, D7[::-1, ::-1], init, v0)),
        "greedy_extend": (lambda: K.nb_greedy_extend(D7, DC, 0), lambda: K.np_greedy_extend(D7, DC, 0)),
        "local_search": (lambda: K.nb_local_search(D7, DC, greedy0.copy(), 20),
                         lambda: K.np_local_search(D7, DC, greedy0.copy(), 20)),
    }


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--size", type=int, default=400, help="approximate sample size for point kernels")
    p.add_argument("--seed", type=int, default=0)
    a = p.parse_args(argv)
    rng = np.random.default_rng(a.seed)
    print(f"numba active: {K.USE_NUMBA}")
    print(f"{'kernel':<24}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}")
    for name, (nb, npf) in _cases(a.size, rng).items():
        t_nb = _best(nb, a.repeat)
        t_np = _best(npf, a.repeat)
        print(f"{name:<24}{t_nb * 1e3:>12.3f}{t_np * 1e3:>12.3f}{t_np / max(t_nb, 1e-12):>10.1f}")


if __name__ == "__main__":
    main()
