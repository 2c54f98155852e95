"""Hot search kernels with a compiled and an interpreted backend.

The backend is picked once from ``BSS_DISABLE_NUMBA`` (see ``bss._accel``).
Both backends are importable directly for benchmarking and cross-checks.
"""
import numpy as np

from .. import _accel
from . import python_impl

if _accel.HAVE_NUMBA:
    from . import numba_impl
else:  # pragma: no cover
    numba_impl = None

BACKEND = _accel.backend_name()


def _impl(backend):
    backend = backend or BACKEND
    if backend == "numba":
        if numba_impl is None:  # pragma: no cover
            raise RuntimeError("numba backend requested but numba is not installed")
        return numba_impl
    if backend == "python":
        return python_impl
    raise ValueError(f"unknown kernel backend: {backend!r}")


def _sizing_order(adj):
    # High-degree vertices first finds a large clique early, which is what
    # the bound needs; ties broken by index to stay deterministic.
    deg = adj.sum(axis=1)
    return np.lexsort((np.arange(len(adj)), -deg))


def max_clique(adj, backend=None) -> np.ndarray:
    """Vertex indices (ascending) of the lexicographically smallest maximum clique.

    Two passes: a colour-ordered branch and bound fixes the maximum size,
    then a search in index order with that size as the target returns the
    first clique it meets, which is the lexicographically smallest one.
    """
    adj = np.ascontiguousarray(adj, dtype=np.uint8)
    if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
        raise ValueError("adjacency must be a square matrix")
    n = len(adj)
    if n == 0:
        return np.empty(0, dtype=np.int64)
    impl = _impl(backend)
    perm = _sizing_order(adj)
    permuted = np.ascontiguousarray(adj[np.ix_(perm, perm)])
    size = int(impl.clique_number(permuted))
    clique = impl.max_clique(adj, size - 1, size)
    return np.asarray(clique, dtype=np.int64)


def enumerate_isomorphisms(adj_a, adj_b, lab_a, lab_b, order, backend=None) -> np.ndarray:
    """All isomorphisms as a (count, n) array, rows sorted lexicographically."""
    adj_a = np.ascontiguousarray(adj_a, dtype=np.uint8)
    adj_b = np.ascontiguousarray(adj_b, dtype=np.uint8)
    lab_a = np.ascontiguousarray(lab_a, dtype=np.int64)
    lab_b = np.ascontiguousarray(lab_b, dtype=np.int64)
    order = np.ascontiguousarray(order, dtype=np.int64)
    rows = _impl(backend).enumerate_isomorphisms(adj_a, adj_b, lab_a, lab_b, order)
    if len(rows) > 1:
        rows = rows[np.lexsort(rows.T[::-1])]
    return rows
