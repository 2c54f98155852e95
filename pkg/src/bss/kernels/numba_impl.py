"""Compiled search kernels.

Both kernels release the GIL so that the thread-based task farm can run them
concurrently. They mirror ``python_impl`` step for step; the two backends must
return identical results for identical inputs.
"""
import numpy as np
from numba import njit


@njit(nogil=True, cache=True)
def _suffix_color_bounds(adj, cand, m, ub, color, stamp_of, stamp):
    # Greedy colouring of cand[m-1], cand[m-2], ..., cand[0]; ub[k] is the
    # number of colour classes needed for the suffix cand[k:].
    ncol = 0
    for k in range(m - 1, -1, -1):
        v = cand[k]
        stamp += 1
        for q in range(k + 1, m):
            if adj[v, cand[q]]:
                stamp_of[color[q]] = stamp
        c = 0
        while c < ncol and stamp_of[c] == stamp:
            c += 1
        color[k] = c
        if c == ncol:
            ncol += 1
        ub[k] = ncol
    return stamp


@njit(nogil=True, cache=True)
def _color_sort(adj, cand, m, col, klass, order_buf):
    # Greedy sequential colouring in the given order, then regroup the
    # candidates by colour class; col[k] is the 1-based class of cand[k].
    ncol = 0
    for k in range(m):
        v = cand[k]
        c = 0
        while True:
            if c == ncol:
                ncol += 1
                break
            clash = False
            for q in range(k):
                if klass[q] == c and adj[v, cand[q]]:
                    clash = True
                    break
            if not clash:
                break
            c += 1
        klass[k] = c
    t = 0
    for c in range(ncol):
        for k in range(m):
            if klass[k] == c:
                order_buf[t] = cand[k]
                col[t] = c + 1
                t += 1
    for k in range(m):
        cand[k] = order_buf[k]


@njit(nogil=True, cache=True)
def clique_number(adj):
    """Size of a maximum clique (colour-ordered branch and bound)."""
    n = adj.shape[0]
    if n == 0:
        return 0
    cand = np.empty((n + 1, n), np.int32)
    col = np.empty((n + 1, n), np.int32)
    clen = np.zeros(n + 1, np.int64)
    pos = np.zeros(n + 1, np.int64)
    klass = np.empty(n, np.int64)
    order_buf = np.empty(n, np.int32)
    best = 0

    for i in range(n):
        cand[0, i] = i
    clen[0] = n
    _color_sort(adj, cand[0], n, col[0], klass, order_buf)
    pos[0] = n - 1
    depth = 0
    while depth >= 0:
        i = pos[depth]
        if i < 0 or depth + col[depth, i] <= best:
            depth -= 1
            continue
        pos[depth] = i - 1
        v = cand[depth, i]
        m = 0
        for k in range(i):
            w = cand[depth, k]
            if adj[v, w]:
                cand[depth + 1, m] = w
                m += 1
        if m == 0:
            if depth + 1 > best:
                best = depth + 1
        else:
            clen[depth + 1] = m
            _color_sort(adj, cand[depth + 1], m, col[depth + 1], klass, order_buf)
            pos[depth + 1] = m - 1
            depth += 1
    return best


@njit(nogil=True, cache=True)
def max_clique(adj, floor, stop_size):
    """First clique larger than ``floor`` in lexicographic search order.

    The search keeps improving until no larger clique exists or ``stop_size``
    is reached. With ``floor=0`` this is the lexicographically smallest
    maximum clique. Returns an empty array when nothing beats ``floor``.
    """
    n = adj.shape[0]
    best = np.empty(n, np.int64)
    best_size = floor
    if n == 0:
        return best[:0]

    cand = np.empty((n + 1, n), np.int32)
    clen = np.zeros(n + 1, np.int64)
    ub = np.empty((n + 1, n), np.int32)
    pos = np.zeros(n + 1, np.int64)
    clique = np.empty(n, np.int64)
    color = np.empty(n, np.int64)
    stamp_of = np.zeros(n + 1, np.int64)
    stamp = 0

    for i in range(n):
        cand[0, i] = i
    clen[0] = n
    stamp = _suffix_color_bounds(adj, cand[0], n, ub[0], color, stamp_of, stamp)

    depth = 0
    while depth >= 0:
        i = pos[depth]
        if i >= clen[depth] or depth + ub[depth, i] <= best_size:
            depth -= 1
            continue
        pos[depth] = i + 1
        v = cand[depth, i]
        clique[depth] = v
        m = 0
        for k in range(i + 1, clen[depth]):
            w = cand[depth, k]
            if adj[v, w]:
                cand[depth + 1, m] = w
                m += 1
        if m == 0:
            if depth + 1 > best_size:
                best_size = depth + 1
                for k in range(best_size):
                    best[k] = clique[k]
                if best_size >= stop_size:
                    break
        else:
            clen[depth + 1] = m
            stamp = _suffix_color_bounds(adj, cand[depth + 1], m, ub[depth + 1], color, stamp_of, stamp)
            pos[depth + 1] = 0
            depth += 1
    if best_size == floor:
        return best[:0].copy()
    return best[:best_size].copy()


@njit(nogil=True, cache=True)
def enumerate_isomorphisms(adj_a, adj_b, lab_a, lab_b, order):
    """All label- and edge-preserving bijections A -> B, one row per mapping.

    Row ``r`` holds, for every vertex ``u`` of A, its image in B. Rows come out
    in search order; callers sort them.
    """
    n = lab_a.shape[0]
    deg_a = np.zeros(n, np.int64)
    deg_b = np.zeros(n, np.int64)
    for i in range(n):
        for j in range(n):
            deg_a[i] += adj_a[i, j]
            deg_b[i] += adj_b[i, j]

    cap = 16
    out = np.empty((cap, n), np.int64)
    count = 0
    mapping = np.full(n, -1, np.int64)
    used = np.zeros(n, np.bool_)
    pos = np.zeros(n + 1, np.int64)

    depth = 0
    while depth >= 0:
        if depth == n:
            if count == cap:
                grown = np.empty((cap * 2, n), np.int64)
                grown[:cap] = out
                out = grown
                cap *= 2
            out[count] = mapping
            count += 1
            depth -= 1
            u = order[depth]
            used[mapping[u]] = False
            mapping[u] = -1
            continue

        u = order[depth]
        found = -1
        w = pos[depth]
        while w < n:
            if not used[w] and lab_b[w] == lab_a[u] and deg_b[w] == deg_a[u]:
                ok = True
                for d2 in range(depth):
                    u2 = order[d2]
                    if adj_a[u, u2] != adj_b[w, mapping[u2]]:
                        ok = False
                        break
                if ok:
                    found = w
                    break
            w += 1

        if found < 0:
            pos[depth] = 0
            depth -= 1
            if depth >= 0:
                up = order[depth]
                used[mapping[up]] = False
                mapping[up] = -1
            continue

        pos[depth] = found + 1
        mapping[u] = found
        used[found] = True
        depth += 1
        pos[depth] = 0
    return out[:count].copy()
