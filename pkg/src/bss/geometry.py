"""Rigid superposition of corresponded point sets and the scores built on it."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GeometryError

# Relative singular-value cutoff below which a centred cloud counts as rank deficient.
_RANK_TOL = 1e-8


@dataclass(frozen=True)
class Superposition:
    """``x -> rotation @ x + translation``; ``rmsd`` is the fit it achieved."""

    rotation: np.ndarray
    translation: np.ndarray
    rmsd: float

    @classmethod
    def identity(cls):
        return cls(np.eye(3), np.zeros(3), 0.0)


@dataclass(frozen=True)
class LigandRmsdScore:
    observed_rmsd: float
    optimal_rmsd: float

    @property
    def ligand_rmsd(self) -> float:
        return self.observed_rmsd - self.optimal_rmsd


def _as_points(x) -> np.ndarray:
    pts = np.asarray(x, dtype=float)
    if pts.ndim == 1 and pts.size == 3:
        pts = pts.reshape(1, 3)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise GeometryError("points must be an (n, 3) array")
    return pts


def rmsd(p, q) -> float:
    p, q = _as_points(p), _as_points(q)
    if len(p) != len(q) or len(p) == 0:
        raise GeometryError("correspondence length mismatch")
    return float(np.sqrt(np.mean(np.sum((p - q) ** 2, axis=1))))


def _rank_ok(centred: np.ndarray) -> bool:
    s = np.linalg.svd(centred, compute_uv=False)
    return s[0] > 0 and s[1] > _RANK_TOL * s[0]


def kabsch(p, q) -> Superposition:
    """Proper rigid motion taking ``q`` onto ``p`` with least RMSD."""
    p, q = _as_points(p), _as_points(q)
    if len(p) != len(q):
        raise GeometryError("correspondence length mismatch")
    if len(p) < 3:
        raise GeometryError("degenerate point set")
    p_mean, q_mean = p.mean(axis=0), q.mean(axis=0)
    pc, qc = p - p_mean, q - q_mean
    if not (_rank_ok(pc) and _rank_ok(qc)):
        raise GeometryError("degenerate point set")

    h = qc.T @ pc
    u, _, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(vt.T @ u.T))
    if d == 0:
        d = 1.0
    rot = vt.T @ np.diag([1.0, 1.0, d]) @ u.T
    trans = p_mean - rot @ q_mean
    fit = rmsd(qc @ rot.T, pc)
    return Superposition(rot, trans, fit)


def apply(s: Superposition, points) -> np.ndarray:
    return _as_points(points) @ np.asarray(s.rotation).T + np.asarray(s.translation)


def ligand_rmsd(ligand_a_points, ligand_b_points, site_superposition: Superposition, mapping) -> LigandRmsdScore:
    """How far the site superposition leaves ligand B from ligand A.

    ``mapping`` is a sequence of ``(index in A, index in B)``. The observed
    RMSD moves B with the site superposition; the optimal RMSD is the best
    any rigid motion of B alone could do on the same atom pairs.
    """
    pairs = np.asarray(list(mapping), dtype=np.int64).reshape(-1, 2)
    if len(pairs) < 3:
        raise GeometryError("insufficient correspondence")
    a = _as_points(ligand_a_points)[pairs[:, 0]]
    b = _as_points(ligand_b_points)[pairs[:, 1]]
    observed = rmsd(a, apply(site_superposition, b))
    try:
        optimal = kabsch(a, b).rmsd
    except GeometryError:
        # Collinear ligand atoms: fall back to the translation-only optimum.
        optimal = rmsd(a - a.mean(axis=0), b - b.mean(axis=0))
        optimal = min(optimal, observed)
    return LigandRmsdScore(observed, optimal)


def normalize_score(target_query: float, query_query: float) -> float:
    """Target-query score relative to the query's self-score."""
    if not query_query > 0:
        raise GeometryError("invalid self-score")
    return target_query / query_query
