"""Ligand graph comparison: all isomorphisms, or a maximum common induced subgraph."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import kernels
from .ingest import MolecularGraph

# One correspondence: ((index in A, index in B), ...), sorted by A index.
VertexMapping = tuple


class MatchKind(str, Enum):
    ISOMORPHIC = "Isomorphic"
    COMMON_SUBGRAPH = "CommonSubgraph"
    NO_OVERLAP = "NoOverlap"


@dataclass(frozen=True)
class MatchOutcome:
    kind: MatchKind
    mappings: tuple
    mcs_size: int
    tanimoto: float


@dataclass(frozen=True)
class ProductGraph:
    """Compatibility graph: vertex ``k`` pairs ``pairs[k, 0]`` of A with ``pairs[k, 1]`` of B."""

    pairs: np.ndarray
    adjacency: np.ndarray

    def __len__(self):
        return len(self.pairs)

    @property
    def n_edges(self) -> int:
        return int(np.count_nonzero(np.triu(self.adjacency, k=1)))

    def to_text(self) -> str:
        """Adjacency list, one line per vertex: ``k (i,j): k1 k2 ...``."""
        lines = [f"# vertices {len(self)} edges {self.n_edges}"]
        for k, (i, j) in enumerate(self.pairs.tolist()):
            nbrs = " ".join(str(x) for x in np.flatnonzero(self.adjacency[k]))
            lines.append(f"{k} ({i},{j}):" + (f" {nbrs}" if nbrs else ""))
        return "\n".join(lines) + "\n"


def tanimoto(m: int, n1: int, n2: int) -> float:
    if n1 < 1 or n2 < 1 or not 0 <= m <= min(n1, n2):
        raise ValueError("invalid match size")
    return m / (n1 + n2 - m)


def _label_codes(a: MolecularGraph, b: MolecularGraph):
    table = {e: k for k, e in enumerate(sorted(set(a.elements) | set(b.elements)))}
    return (np.array([table[e] for e in a.elements], dtype=np.int64),
            np.array([table[e] for e in b.elements], dtype=np.int64))


def _signature(g: MolecularGraph):
    deg = g.adjacency.sum(axis=1)
    return Counter(zip(g.elements, deg.tolist()))


def _match_order(a: MolecularGraph, b: MolecularGraph) -> np.ndarray:
    """Visit order over A: rare (element, degree) classes first, then grow along bonds."""
    deg = a.adjacency.sum(axis=1).tolist()
    sig_b = _signature(b)
    rarity = [sig_b[(e, d)] for e, d in zip(a.elements, deg)]
    adj = a.adjacency
    n = len(a)
    placed = np.zeros(n, dtype=bool)
    links = np.zeros(n, dtype=np.int64)
    order = []
    for _ in range(n):
        best = min((u for u in range(n) if not placed[u]),
                   key=lambda u: (-links[u], rarity[u], a.elements[u], -deg[u], u))
        order.append(best)
        placed[best] = True
        links += adj[best]
    return np.array(order, dtype=np.int64)


def find_isomorphisms(a: MolecularGraph, b: MolecularGraph, backend=None) -> list:
    """Every bijection A -> B that keeps element labels and bonds, in sorted order."""
    if len(a) != len(b) or a.formula != b.formula or _signature(a) != _signature(b):
        return []
    lab_a, lab_b = _label_codes(a, b)
    rows = kernels.enumerate_isomorphisms(a.adjacency, b.adjacency, lab_a, lab_b,
                                          _match_order(a, b), backend=backend)
    return [tuple(enumerate(row)) for row in rows.tolist()]


def modular_product(a: MolecularGraph, b: MolecularGraph) -> ProductGraph:
    """Label-compatible vertex pairs joined when they agree on bond/no-bond."""
    ea = np.asarray(a.elements)
    eb = np.asarray(b.elements)
    ii, jj = np.nonzero(ea[:, None] == eb[None, :])
    pairs = np.stack([ii, jj], axis=1).astype(np.int64)
    adj_a = a.adjacency[np.ix_(ii, ii)]
    adj_b = b.adjacency[np.ix_(jj, jj)]
    distinct = (ii[:, None] != ii[None, :]) & (jj[:, None] != jj[None, :])
    return ProductGraph(pairs, distinct & (adj_a == adj_b))


def max_clique(g, backend=None) -> tuple:
    """Maximum clique as ascending vertex indices; ties go to the lexicographically smallest."""
    adj = g.adjacency if isinstance(g, ProductGraph) else np.asarray(g)
    return tuple(kernels.max_clique(adj, backend=backend).tolist())


def find_mcs(a: MolecularGraph, b: MolecularGraph, backend=None) -> MatchOutcome:
    """Maximum common induced subgraph via a maximum clique of the modular product."""
    product = modular_product(a, b)
    clique = max_clique(product, backend=backend)
    m = len(clique)
    if m == 0:
        return MatchOutcome(MatchKind.NO_OVERLAP, (), 0, 0.0)
    mapping = tuple(sorted(tuple(product.pairs[k].tolist()) for k in clique))
    score = tanimoto(m, len(a), len(b))
    kind = MatchKind.ISOMORPHIC if m == len(a) == len(b) else MatchKind.COMMON_SUBGRAPH
    return MatchOutcome(kind, (mapping,), m, score)


def match_ligands(a: MolecularGraph, b: MolecularGraph, backend=None) -> MatchOutcome:
    """Isomorphisms when there are any, otherwise the maximum common subgraph."""
    isos = find_isomorphisms(a, b, backend=backend)
    if isos:
        return MatchOutcome(MatchKind.ISOMORPHIC, tuple(isos), len(a), 1.0)
    return find_mcs(a, b, backend=backend)
