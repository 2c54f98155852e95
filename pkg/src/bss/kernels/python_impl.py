"""Interpreted fallback for the search kernels.

Same algorithms as ``numba_impl``, written with Python integers as bitsets so
the interpreted path stays usable on graphs of a few hundred vertices.
"""
import numpy as np


def _neighbour_masks(adj):
    masks = []
    for row in np.asarray(adj, dtype=bool):
        m = 0
        for j in np.flatnonzero(row):
            m |= 1 << int(j)
        masks.append(m)
    return masks


def _bits(mask):
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def _suffix_color_bounds(cand, nbr):
    ub = [0] * len(cand)
    classes = []
    for k in range(len(cand) - 1, -1, -1):
        v = cand[k]
        nv = nbr[v]
        for c, members in enumerate(classes):
            if not members & nv:
                classes[c] = members | (1 << v)
                break
        else:
            classes.append(1 << v)
        ub[k] = len(classes)
    return ub


def _color_sort(cand, nbr):
    classes = []
    for v in cand:
        nv = nbr[v]
        for members in classes:
            if not any((nv >> u) & 1 for u in members):
                members.append(v)
                break
        else:
            classes.append([v])
    order, col = [], []
    for c, members in enumerate(classes, start=1):
        order.extend(members)
        col.extend([c] * len(members))
    return order, col


def clique_number(adj):
    """Size of a maximum clique (colour-ordered branch and bound)."""
    n = len(adj)
    if n == 0:
        return 0
    nbr = _neighbour_masks(adj)
    best = 0

    def expand(depth, cand):
        nonlocal best
        order, col = _color_sort(cand, nbr)
        for i in range(len(order) - 1, -1, -1):
            if depth + col[i] <= best:
                return
            v = order[i]
            nv = nbr[v]
            rest = [w for w in order[:i] if (nv >> w) & 1]
            if rest:
                expand(depth + 1, rest)
            elif depth + 1 > best:
                best = depth + 1

    expand(0, list(range(n)))
    return best


class _Stop(Exception):
    pass


def max_clique(adj, floor, stop_size):
    """First clique larger than ``floor`` in lexicographic search order.

    See ``numba_impl.max_clique``; returns an empty array when nothing beats
    ``floor``.
    """
    n = len(adj)
    if n == 0:
        return np.empty(0, dtype=np.int64)
    nbr = _neighbour_masks(adj)
    best = []
    best_size = floor
    clique = []

    def expand(cand):
        nonlocal best, best_size
        ub = _suffix_color_bounds(cand, nbr)
        depth = len(clique)
        for i, v in enumerate(cand):
            if depth + ub[i] <= best_size:
                return
            clique.append(v)
            nv = nbr[v]
            rest = [w for w in cand[i + 1:] if (nv >> w) & 1]
            if rest:
                expand(rest)
            elif len(clique) > best_size:
                best = list(clique)
                best_size = len(best)
                if best_size >= stop_size:
                    raise _Stop
            clique.pop()

    try:
        expand(list(range(n)))
    except _Stop:
        pass
    return np.asarray(best, dtype=np.int64)


def enumerate_isomorphisms(adj_a, adj_b, lab_a, lab_b, order):
    """All label- and edge-preserving bijections A -> B, one row per mapping."""
    adj_a = np.asarray(adj_a, dtype=bool)
    adj_b = np.asarray(adj_b, dtype=bool)
    n = len(lab_a)
    lab_a = [int(x) for x in lab_a]
    lab_b = [int(x) for x in lab_b]
    deg_a = adj_a.sum(axis=1).tolist()
    deg_b = adj_b.sum(axis=1).tolist()
    rows_a = adj_a.tolist()
    rows_b = adj_b.tolist()
    order = [int(u) for u in order]

    mapping = [-1] * n
    used = [False] * n
    found = []

    def extend(depth):
        if depth == n:
            found.append(list(mapping))
            return
        u = order[depth]
        ra = rows_a[u]
        for w in range(n):
            if used[w] or lab_b[w] != lab_a[u] or deg_b[w] != deg_a[u]:
                continue
            rb = rows_b[w]
            if all(ra[u2] == rb[mapping[u2]] for u2 in order[:depth]):
                mapping[u] = w
                used[w] = True
                extend(depth + 1)
                used[w] = False
                mapping[u] = -1

    extend(0)
    return np.asarray(found, dtype=np.int64).reshape(len(found), n)
