"""Hot numeric loops.

Every kernel exists twice: a numba-compiled loop version (``nb_*``) and a
numpy version (``np_*``). The public name points at one of them depending on
``GHPURSUIT_NUMBA`` (see :mod:`ghpursuit._accel`). Both versions must agree to
floating-point round-off; ``tests/test_kernels.py`` holds them to that.
"""
from __future__ import annotations

import numpy as np

from ._accel import USE_NUMBA, njit

__all__ = [
    "floyd_warshall",
    "point_distances",
    "farthest_point_sample",
    "map_distortion",
    "branch_and_bound",
    "greedy_extend",
    "local_search",
]


# --------------------------------------------------------------------------
# all-pairs shortest paths
# --------------------------------------------------------------------------


def _fw_loops(W):
    D = W.copy()
    n = D.shape[0]
    for k in range(n):
        for i in range(n):
            dik = D[i, k]
            if dik == np.inf:
                continue
            for j in range(n):
                cand = dik + D[k, j]
                if cand < D[i, j]:
                    D[i, j] = cand
    return D


def np_floyd_warshall(W):
    D = W.copy()
    for k in range(D.shape[0]):
        np.minimum(D, D[:, k, None] + D[None, k, :], out=D)
    return D


nb_floyd_warshall = njit(_fw_loops)


# --------------------------------------------------------------------------
# point-to-point distances on a metric graph
# --------------------------------------------------------------------------


def _pt_dist(D, eu, ev, elen, e1, o1, e2, o2):
    a1 = o1
    b1 = elen[e1] - o1
    a2 = o2
    b2 = elen[e2] - o2
    u1 = eu[e1]
    v1 = ev[e1]
    u2 = eu[e2]
    v2 = ev[e2]
    best = (a1 + a2) + D[u1, u2]
    c = (a1 + b2) + D[u1, v2]
    if c < best:
        best = c
    c = (b1 + a2) + D[v1, u2]
    if c < best:
        best = c
    c = (b1 + b2) + D[v1, v2]
    if c < best:
        best = c
    if e1 == e2:
        c = abs(o1 - o2)
        if c < best:
            best = c
    return best


_nb_pt_dist = njit(_pt_dist)


def _point_distances_loops(D, eu, ev, elen, pe, po, qe, qo):
    P = pe.shape[0]
    Q = qe.shape[0]
    out = np.empty((P, Q))
    for i in range(P):
        for j in range(Q):
            out[i, j] = _nb_pt_dist(D, eu, ev, elen, pe[i], po[i], qe[j], qo[j])
    return out


def np_point_distances(D, eu, ev, elen, pe, po, qe, qo):
    pa = po[:, None]
    pb = (elen[pe] - po)[:, None]
    qa = qo[None, :]
    qb = (elen[qe] - qo)[None, :]
    pu = eu[pe][:, None]
    pv = ev[pe][:, None]
    qu = eu[qe][None, :]
    qv = ev[qe][None, :]
    out = (pa + qa) + D[pu, qu]
    np.minimum(out, (pa + qb) + D[pu, qv], out=out)
    np.minimum(out, (pb + qa) + D[pv, qu], out=out)
    np.minimum(out, (pb + qb) + D[pv, qv], out=out)
    same = pe[:, None] == qe[None, :]
    direct = np.abs(pa - qa)
    np.minimum(out, np.where(same, direct, np.inf), out=out)
    return out


nb_point_distances = njit(_point_distances_loops)


# --------------------------------------------------------------------------
# farthest-point sampling over a finite sample of the graph
# --------------------------------------------------------------------------


def _fps_loops(D, eu, ev, elen, se, so, seed, stop_radius, max_points):
    m = se.shape[0]
    mind = np.full(m, np.inf)
    chosen = np.empty(min(max_points, m), dtype=np.int64)
    count = 0
    pick = seed
    radius = np.inf
    while True:
        chosen[count] = pick
        count += 1
        e1 = se[pick]
        o1 = so[pick]
        radius = 0.0
        far = 0
        for j in range(m):
            d = _nb_pt_dist(D, eu, ev, elen, e1, o1, se[j], so[j])
            if d < mind[j]:
                mind[j] = d
            if mind[j] > radius:
                radius = mind[j]
                far = j
        if radius <= stop_radius or count >= chosen.shape[0]:
            break
        pick = far
    return chosen[:count], radius


def np_farthest_point_sample(D, eu, ev, elen, se, so, seed, stop_radius, max_points):
    m = se.shape[0]
    mind = np.full(m, np.inf)
    chosen = []
    pick = seed
    cap = min(max_points, m)
    while True:
        chosen.append(pick)
        row = np_point_distances(D, eu, ev, elen, se[pick : pick + 1], so[pick : pick + 1], se, so)[0]
        np.minimum(mind, row, out=mind)
        far = int(np.argmax(mind))
        radius = float(mind[far])
        if radius <= stop_radius or len(chosen) >= cap:
            break
        pick = far
    return np.asarray(chosen, dtype=np.int64), radius


nb_farthest_point_sample = njit(_fps_loops)


# --------------------------------------------------------------------------
# distortion of an index map between two distance matrices
# --------------------------------------------------------------------------


def _map_distortion_loops(DA, DB, idx):
    n = DA.shape[0]
    worst = 0.0
    for i in range(n):
        bi = idx[i]
        for j in range(i + 1, n):
            d = abs(DA[i, j] - DB[bi, idx[j]])
            if d > worst:
                worst = d
    return worst


def np_map_distortion(DA, DB, idx):
    if DA.shape[0] < 2:
        return 0.0
    return float(np.max(np.abs(DA - DB[np.ix_(idx, idx)])))


nb_map_distortion = njit(_map_distortion_loops)


# --------------------------------------------------------------------------
# exact bijection search
# --------------------------------------------------------------------------


def _bnb(DA, DB, init_perm, init_val):
    """Depth-first branch and bound over bijections, assigning A-points in index order.

    A branch is cut as soon as its partial distortion reaches the incumbent, so the
    returned value is the exact minimum (ties keep the first perm found).
    """
    n = DA.shape[0]
    best = init_val
    best_perm = init_perm.copy()
    assign = np.full(n, -1, dtype=np.int64)
    used = np.zeros(n, dtype=np.bool_)
    partial = np.zeros(n + 1)
    nxt = np.zeros(n, dtype=np.int64)
    k = 0
    while k >= 0:
        if k == n:
            if partial[n] < best:
                best = partial[n]
                best_perm[:] = assign
            k -= 1
            used[assign[k]] = False
            assign[k] = -1
            continue
        b = nxt[k]
        placed = False
        while b < n:
            if not used[b]:
                cost = partial[k]
                for j in range(k):
                    d = abs(DA[k, j] - DB[b, assign[j]])
                    if d > cost:
                        cost = d
                        if cost >= best:
                            break
                if cost < best:
                    assign[k] = b
                    used[b] = True
                    partial[k + 1] = cost
                    nxt[k] = b + 1
                    placed = True
                    break
            b += 1
        if placed:
            k += 1
            if k < n:
                nxt[k] = 0
        else:
            nxt[k] = 0
            k -= 1
            if k >= 0:
                used[assign[k]] = False
                assign[k] = -1
    return best_perm, best


nb_branch_and_bound = njit(_bnb)
np_branch_and_bound = _bnb


# --------------------------------------------------------------------------
# greedy distortion-consistent extension
# --------------------------------------------------------------------------


def _greedy_loops(DA, DC, anchor):
    n = DA.shape[0]
    m = DC.shape[0]
    assign = np.full(n, -1, dtype=np.int64)
    used = np.zeros(m, dtype=np.bool_)
    assign[0] = anchor
    used[anchor] = True
    worst = 0.0
    for k in range(1, n):
        best_c = -1
        best_cost = np.inf
        for c in range(m):
            if used[c]:
                continue
            cost = 0.0
            for j in range(k):
                d = abs(DA[k, j] - DC[c, assign[j]])
                if d > cost:
                    cost = d
                    if cost >= best_cost:
                        break
            if cost < best_cost:
                best_cost = cost
                best_c = c
        assign[k] = best_c
        used[best_c] = True
        if best_cost > worst:
            worst = best_cost
    return assign, worst


def np_greedy_extend(DA, DC, anchor):
    n = DA.shape[0]
    m = DC.shape[0]
    assign = np.full(n, -1, dtype=np.int64)
    used = np.zeros(m, dtype=bool)
    assign[0] = anchor
    used[anchor] = True
    worst = 0.0
    for k in range(1, n):
        cost = np.max(np.abs(DC[:, assign[:k]] - DA[k, :k][None, :]), axis=1)
        cost[used] = np.inf
        c = int(np.argmin(cost))
        assign[k] = c
        used[c] = True
        worst = max(worst, float(cost[c]))
    return assign, worst


nb_greedy_extend = njit(_greedy_loops)


# --------------------------------------------------------------------------
# bottleneck local search (relocations and swaps)
# --------------------------------------------------------------------------


def _local_search_loops(DA, DC, assign, max_rounds):
    """Improve ``assign`` by moving one endpoint of the worst pair.

    Candidate moves send point ``t`` to any target ``c``; an unused ``c`` is a
    relocation, a used one a swap with its current owner. Moves are ranked by
    (max error, summed error) so plateaus of the max still make progress.
    """
    n = DA.shape[0]
    m = DC.shape[0]
    assign = assign.copy()
    if n < 2:
        return assign, 0.0
    owner = np.full(m, -1, dtype=np.int64)
    for i in range(n):
        owner[assign[i]] = i
    top_val = np.zeros((n, 3))
    top_col = np.zeros((n, 3), dtype=np.int64)
    rs = np.zeros(n)
    new_t = np.zeros(n)
    new_k = np.zeros(n)
    E = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d = abs(DA[i, j] - DC[assign[i], assign[j]])
            E[i, j] = d
            E[j, i] = d
    for _ in range(max_rounds):
        cur_max = 0.0
        p = 0
        q = 1
        total = 0.0
        for i in range(n):
            s = 0.0
            for r in range(3):
                top_val[i, r] = -1.0
                top_col[i, r] = -1
            for j in range(n):
                if j == i:
                    continue
                e = E[i, j]
                s += e
                if e > top_val[i, 2]:
                    if e > top_val[i, 1]:
                        top_val[i, 2] = top_val[i, 1]
                        top_col[i, 2] = top_col[i, 1]
                        if e > top_val[i, 0]:
                            top_val[i, 1] = top_val[i, 0]
                            top_col[i, 1] = top_col[i, 0]
                            top_val[i, 0] = e
                            top_col[i, 0] = j
                        else:
                            top_val[i, 1] = e
                            top_col[i, 1] = j
                    else:
                        top_val[i, 2] = e
                        top_col[i, 2] = j
                if j > i and e > cur_max:
                    cur_max = e
                    p = i
                    q = j
            rs[i] = s
            total += s
        total *= 0.5
        best_max = cur_max
        best_total = total
        best_t = -1
        best_c = -1
        for side in range(2):
            t = p if side == 0 else q
            for c in range(m):
                if c == assign[t]:
                    continue
                k = owner[c]
                ct = assign[t]
                # rest max over rows not in {t, k}, columns not in {t, k}
                rest = 0.0
                for i in range(n):
                    if i == t or i == k:
                        continue
                    for r in range(3):
                        col = top_col[i, r]
                        if col == -1:
                            break
                        if col != t and col != k:
                            if top_val[i, r] > rest:
                                rest = top_val[i, r]
                            break
                if rest > best_max:
                    continue
                nmax = rest
                if k == -1:
                    s_new = 0.0
                    for j in range(n):
                        if j == t:
                            continue
                        e = abs(DA[t, j] - DC[c, assign[j]])
                        new_t[j] = e
                        s_new += e
                        if e > nmax:
                            nmax = e
                    ntotal = total - rs[t] + s_new
                else:
                    s_new = 0.0
                    for j in range(n):
                        if j == t or j == k:
                            continue
                        et = abs(DA[t, j] - DC[c, assign[j]])
                        ek = abs(DA[k, j] - DC[ct, assign[j]])
                        s_new += et + ek
                        if et > nmax:
                            nmax = et
                        if ek > nmax:
                            nmax = ek
                    etk = abs(DA[t, k] - DC[c, ct])
                    s_new += etk
                    if etk > nmax:
                        nmax = etk
                    ntotal = total - rs[t] - rs[k] + E[t, k] + s_new
                if nmax < best_max or (nmax == best_max and ntotal < best_total - 1e-12):
                    best_max = nmax
                    best_total = ntotal
                    best_t = t
                    best_c = c
        if best_t == -1:
            return assign, cur_max
        t = best_t
        c = best_c
        k = owner[c]
        ct = assign[t]
        assign[t] = c
        owner[c] = t
        if k == -1:
            owner[ct] = -1
        else:
            assign[k] = ct
            owner[ct] = k
        for j in range(n):
            if j != t:
                e = abs(DA[t, j] - DC[assign[t], assign[j]])
                E[t, j] = e
                E[j, t] = e
            if k != -1 and j != k:
                e = abs(DA[k, j] - DC[assign[k], assign[j]])
                E[k, j] = e
                E[j, k] = e
    cur_max = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            if E[i, j] > cur_max:
                cur_max = E[i, j]
    return assign, cur_max


nb_local_search = njit(_local_search_loops)
np_local_search = _local_search_loops


if USE_NUMBA:
    floyd_warshall = nb_floyd_warshall
    point_distances = nb_point_distances
    farthest_point_sample = nb_farthest_point_sample
    map_distortion = nb_map_distortion
    branch_and_bound = nb_branch_and_bound
    greedy_extend = nb_greedy_extend
    local_search = nb_local_search
else:
    floyd_warshall = np_floyd_warshall
    point_distances = np_point_distances
    farthest_point_sample = np_farthest_point_sample
    map_distortion = np_map_distortion
    branch_and_bound = np_branch_and_bound
    greedy_extend = np_greedy_extend
    local_search = np_local_search
