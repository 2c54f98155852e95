import itertools

import numpy as np
import pytest

from bss.ingest import Atom, MolecularGraph, StructureStore
from bss.synthetic import CORPUS_IDS, bundled_corpus_dir


def atom(serial, name, element, pos, resname="LIG", seq=1, chain="A", het=True):
    return Atom(serial, name, element, resname, chain, seq, tuple(float(v) for v in pos), het)


def graph(elements, edges, positions=None, key=("LIG", "A", 1)):
    n = len(elements)
    if positions is None:
        positions = [(float(i), 0.0, 0.0) for i in range(n)]
    edges = frozenset((min(i, j), max(i, j)) for i, j in edges)
    return MolecularGraph(key, tuple(elements), edges, tuple(tuple(p) for p in positions))


def random_graph(rng, n, p=0.4, alphabet=("C", "N", "O")):
    elements = [alphabet[k] for k in rng.integers(len(alphabet), size=n)]
    edges = [(i, j) for i, j in itertools.combinations(range(n), 2) if rng.random() < p]
    return graph(elements, edges)


def relabel(g, perm):
    """Copy of ``g`` with vertex i moved to position perm[i]."""
    n = len(g)
    elements = [None] * n
    positions = [None] * n
    for i in range(n):
        elements[perm[i]] = g.elements[i]
        positions[perm[i]] = g.positions[i]
    return graph(elements, [(perm[i], perm[j]) for i, j in g.edges], positions)


def benzene():
    ang = np.radians(60 * np.arange(6))
    pos = np.stack([1.39 * np.cos(ang), 1.39 * np.sin(ang), np.zeros(6)], axis=1)
    return graph(["C"] * 6, [(i, (i + 1) % 6) for i in range(6)], pos)


@pytest.fixture(scope="session")
def corpus_store():
    return StructureStore(bundled_corpus_dir(), offline=True)


@pytest.fixture(scope="session")
def corpus_ids():
    return CORPUS_IDS


@pytest.fixture
def rng():
    return np.random.default_rng(20240521)
