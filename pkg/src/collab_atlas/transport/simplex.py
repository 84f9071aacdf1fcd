"""Exact transportation problem solver (primal network simplex).

The bipartite graph has one node per source and sink point plus an
artificial root. The initial basis hangs every node off the root through an
artificial arc; artificial arcs are never priced again once they leave the
basis. Pivoting uses block search for the entering arc and the
strongly-feasible-tree rule for the leaving arc, which rules out cycling on
degenerate pivots. The spanning tree keeps parent pointers, depths and
doubly linked child lists, so a pivot costs O(cycle + moved subtree).

Arc costs are either read from a precomputed matrix or recomputed from point
coordinates on demand; the second mode needs O(m + n) memory.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

UP = 1
DOWN = -1

# pricing block length as a fraction of sqrt(#arcs); on dense 1000 x 1000
# instances 0.05 to 0.15 scan about 25% fewer arcs in total than 1.0
BLOCK_FACTOR = 0.1


class SimplexError(RuntimeError):
    pass


@njit(cache=True, nogil=True, inline="always")
def _ground_cost(xs, ys, i, j, p):
    acc = 0.0
    for k in range(xs.shape[1]):
        diff = xs[i, k] - ys[j, k]
        acc += diff * diff
    if p == 2:
        return acc
    return math.sqrt(acc)


@njit(cache=True, nogil=True, inline="always")
def _arc_cost(e, m, n, use_matrix, C, xs, ys, p, art_cost):
    if e < m * n:
        i = e // n
        j = e - i * n
        if use_matrix:
            return C[i, j]
        return _ground_cost(xs, ys, i, j, p)
    u = e - m * n
    if u < m:
        return 0.0
    return art_cost


@njit(cache=True, nogil=True, inline="always")
def _detach(u, parent, first_child, next_sib, prev_sib):
    p = parent[u]
    if prev_sib[u] != -1:
        next_sib[prev_sib[u]] = next_sib[u]
    else:
        first_child[p] = next_sib[u]
    if next_sib[u] != -1:
        prev_sib[next_sib[u]] = prev_sib[u]
    next_sib[u] = -1
    prev_sib[u] = -1


@njit(cache=True, nogil=True, inline="always")
def _attach(u, p, parent, first_child, next_sib, prev_sib):
    parent[u] = p
    prev_sib[u] = -1
    next_sib[u] = first_child[p]
    if first_child[p] != -1:
        prev_sib[first_child[p]] = u
    first_child[p] = u


@njit(cache=True, nogil=True)
def _network_simplex(a, b, use_matrix, C, xs, ys, p, max_iter):
    m = a.shape[0]
    n = b.shape[0]
    N = m + n
    root = N
    n_arcs = m * n

    max_cost = 0.0
    if use_matrix:
        for i in range(m):
            for j in range(n):
                if C[i, j] > max_cost:
                    max_cost = C[i, j]
    else:
        for i in range(m):
            for j in range(n):
                c = _ground_cost(xs, ys, i, j, p)
                if c > max_cost:
                    max_cost = c
    art_cost = (max_cost + 1.0) * N
    eps = 1e-13 * (max_cost + 1.0) * N

    parent = np.empty(N + 1, np.int64)
    pred = np.empty(N + 1, np.int64)
    pred_dir = np.zeros(N + 1, np.int64)
    flow = np.zeros(N + 1, np.float64)
    pi = np.zeros(N + 1, np.float64)
    depth = np.zeros(N + 1, np.int64)
    first_child = np.full(N + 1, -1, np.int64)
    next_sib = np.full(N + 1, -1, np.int64)
    prev_sib = np.full(N + 1, -1, np.int64)
    stem = np.empty(N + 1, np.int64)
    s_pred = np.empty(N + 1, np.int64)
    s_dir = np.empty(N + 1, np.int64)
    s_flow = np.empty(N + 1, np.float64)
    stack = np.empty(N + 1, np.int64)

    parent[root] = -1
    pred[root] = -1
    for u in range(N - 1, -1, -1):
        _attach(u, root, parent, first_child, next_sib, prev_sib)
        pred[u] = n_arcs + u
        depth[u] = 1
        if u < m:
            pred_dir[u] = UP
            flow[u] = a[u]
            pi[u] = 0.0
        else:
            pred_dir[u] = DOWN
            flow[u] = b[u - m]
            pi[u] = art_cost

    block = max(10, int(math.ceil(BLOCK_FACTOR * math.sqrt(n_arcs))))
    next_arc = 0
    it = 0
    while True:
        # entering arc: block search over real arcs, scanned one row segment
        # at a time with the row potential hoisted out of the inner loop
        best = -eps
        in_arc = -1
        cnt = block
        scanned = 0
        i = next_arc // n
        j = next_arc - i * n
        while scanned < n_arcs:
            stop = min(n, j + cnt, j + n_arcs - scanned)
            pi_i = pi[i]
            row_best = best - pi_i
            row_arg = -1
            if use_matrix:
                for jj in range(j, stop):
                    c = C[i, jj] - pi[m + jj]
                    if c < row_best and pred[m + jj] != i * n + jj and pred[i] != i * n + jj:
                        row_best = c
                        row_arg = jj
            else:
                for jj in range(j, stop):
                    c = _ground_cost(xs, ys, i, jj, p) - pi[m + jj]
                    if c < row_best and pred[m + jj] != i * n + jj and pred[i] != i * n + jj:
                        row_best = c
                        row_arg = jj
            if row_arg != -1:
                best = row_best + pi_i
                in_arc = i * n + row_arg
            step = stop - j
            scanned += step
            cnt -= step
            j = stop
            if j == n:
                j = 0
                i += 1
                if i == m:
                    i = 0
            if cnt == 0:
                if in_arc != -1:
                    break
                cnt = block
        if in_arc == -1:
            break
        next_arc = i * n + j
        it += 1
        if it > max_iter:
            return -1, flow, pred, pi, art_cost

        src = in_arc // n
        tgt = m + in_arc - src * n
        u = src
        v = tgt
        while u != v:
            if depth[u] > depth[v]:
                u = parent[u]
            elif depth[v] > depth[u]:
                v = parent[v]
            else:
                u = parent[u]
                v = parent[v]
        join = u

        # leaving arc (strongly feasible rule)
        delta = np.inf
        u_out = -1
        result = 0
        u = src
        while u != join:
            if pred_dir[u] == UP and flow[u] < delta:
                delta = flow[u]
                u_out = u
                result = 1
            u = parent[u]
        u = tgt
        while u != join:
            if pred_dir[u] == DOWN and flow[u] <= delta:
                delta = flow[u]
                u_out = u
                result = 2
            u = parent[u]
        if result == 0:
            return -2, flow, pred, pi, art_cost
        if result == 1:
            u_in = src
            v_in = tgt
        else:
            u_in = tgt
            v_in = src

        if delta > 0:
            u = src
            while u != join:
                flow[u] -= pred_dir[u] * delta
                u = parent[u]
            u = tgt
            while u != join:
                flow[u] += pred_dir[u] * delta
                u = parent[u]
        flow[u_out] = 0.0

        # re-hang the stem u_in .. u_out below v_in
        k = 0
        u = u_in
        while True:
            stem[k] = u
            s_pred[k] = pred[u]
            s_dir[k] = pred_dir[u]
            s_flow[k] = flow[u]
            k += 1
            if u == u_out:
                break
            u = parent[u]
        for q in range(k):
            _detach(stem[q], parent, first_child, next_sib, prev_sib)
        _attach(stem[0], v_in, parent, first_child, next_sib, prev_sib)
        pred[stem[0]] = in_arc
        pred_dir[stem[0]] = UP if stem[0] == src else DOWN
        flow[stem[0]] = delta
        for q in range(1, k):
            w = stem[q]
            _attach(w, stem[q - 1], parent, first_child, next_sib, prev_sib)
            pred[w] = s_pred[q - 1]
            pred_dir[w] = -s_dir[q - 1]
            flow[w] = s_flow[q - 1]

        # shift potentials and depths of the moved subtree
        c_in = _arc_cost(in_arc, m, n, use_matrix, C, xs, ys, p, art_cost)
        if u_in == src:
            sigma = pi[v_in] - c_in - pi[u_in]
        else:
            sigma = pi[v_in] + c_in - pi[u_in]
        top = 0
        stack[top] = u_in
        top += 1
        while top > 0:
            top -= 1
            w = stack[top]
            pi[w] += sigma
            depth[w] = depth[parent[w]] + 1
            ch = first_child[w]
            while ch != -1:
                stack[top] = ch
                top += 1
                ch = next_sib[ch]
    return it, flow, pred, pi, art_cost


def solve_transport(a, b, *, cost=None, xs=None, ys=None, p: int = 2,
                    max_iter: int | None = None):
    """Minimum-cost transport plan between mass vectors ``a`` and ``b``.

    Pass either a cost matrix ``cost`` (m x n) or coordinates ``xs``/``ys``
    with order ``p`` to compute ``|x - y|^p`` on the fly. Masses must be
    positive and sum to the same total. Returns ``(cost, rows, cols, flows,
    iterations)`` where the plan is the sparse list of positive flows.
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    m, n = a.size, b.size
    if m == 0 or n == 0:
        raise ValueError("both distributions need at least one point")
    if np.any(a <= 0) or np.any(b <= 0):
        raise ValueError("masses must be strictly positive")
    use_matrix = cost is not None
    if use_matrix:
        C = np.ascontiguousarray(cost, dtype=np.float64)
        if C.shape != (m, n):
            raise ValueError("cost matrix shape does not match the masses")
        xs = ys = np.zeros((1, 1))
    else:
        C = np.zeros((1, 1))
        xs = np.ascontiguousarray(xs, dtype=np.float64)
        ys = np.ascontiguousarray(ys, dtype=np.float64)
        if xs.shape[0] != m or ys.shape[0] != n:
            raise ValueError("coordinates do not match the masses")
    if p not in (1, 2):
        raise ValueError("p must be 1 or 2")
    if max_iter is None:
        max_iter = max(100000, 50 * (m + n) * int(math.sqrt(m * n) + 1))
    # equalize totals exactly so artificial arcs end with (near) zero flow
    b = b * (a.sum() / b.sum())
    it, flow, pred, _, _ = _network_simplex(a, b, use_matrix, C, xs, ys, p, max_iter)
    if it == -1:
        raise SimplexError(f"no optimum after {max_iter} pivots")
    if it == -2:
        raise SimplexError("unbounded pivot; inputs are inconsistent")
    nodes = np.arange(m + n)
    real = (pred[:m + n] < m * n) & (flow[:m + n] > 0)
    arcs = pred[nodes[real]]
    rows = arcs // n
    cols = arcs % n
    flows = flow[nodes[real]]
    if use_matrix:
        costs = C[rows, cols]
    else:
        diff = xs[rows] - ys[cols]
        sq = np.einsum("ij,ij->i", diff, diff)
        costs = sq if p == 2 else np.sqrt(sq)
    total = float(np.dot(flows, costs))
    return total, rows, cols, flows, it
