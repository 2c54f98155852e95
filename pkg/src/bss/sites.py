"""Binding-site extraction and local site alignment by product-graph maximum clique."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import geometry
from .errors import EmptySiteError, GeometryError
from .graphmatch import ProductGraph, max_clique
from .ingest import MolecularGraph, Structure

RESIDUE_CLASSES = {
    "hydrophobic": ("ALA", "VAL", "LEU", "ILE", "MET", "PRO", "GLY", "CYS", "MSE"),
    "aromatic": ("PHE", "TYR", "TRP"),
    "polar": ("SER", "THR", "ASN", "GLN"),
    "positive": ("LYS", "ARG", "HIS"),
    "negative": ("ASP", "GLU"),
}
RESIDUE_CLASS = {res: cls for cls, members in RESIDUE_CLASSES.items() for res in members}


@dataclass(frozen=True)
class SiteParams:
    site_cutoff: float = 5.0
    eps: float = 1.0
    dmax: float = 15.0
    min_patch: int = 10
    patch_rmsd_cutoff: float = 2.0
    angle_cutoff: float = 90.0
    residue_matching: str = "class"

    def as_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class BindingSite:
    source: tuple
    residues: tuple
    centroid: tuple
    protein_centroid: tuple

    def __len__(self):
        return len(self.residues)

    @property
    def ca(self) -> np.ndarray:
        return np.array([r[3] for r in self.residues], dtype=float).reshape(-1, 3)

    @property
    def names(self):
        return [r[0] for r in self.residues]


@dataclass(frozen=True)
class SiteAlignment:
    correspondence: tuple
    superposition: geometry.Superposition | None
    patch_rmsd: float | None
    surface_vector_angle: float | None
    accepted: bool
    note: str = ""

    def summary(self) -> dict:
        return {
            "size": len(self.correspondence),
            "patch_rmsd": self.patch_rmsd,
            "surface_vector_angle": self.surface_vector_angle,
            "accepted": self.accepted,
            "note": self.note,
        }


def _residue_label(name: str, mode: str) -> str:
    if mode == "exact":
        return name
    return RESIDUE_CLASS.get(name, "other:" + name)


def protein_centroid(structure: Structure) -> np.ndarray:
    ca = [a.position for a in structure.atoms if not a.is_hetatm and a.name.strip() == "CA"]
    if not ca:
        ca = [a.position for a in structure.atoms if not a.is_hetatm]
    if not ca:
        raise EmptySiteError("empty binding site")
    return np.mean(np.asarray(ca, dtype=float), axis=0)


def extract_binding_site(structure: Structure, ligand: MolecularGraph, cutoff: float = 5.0) -> BindingSite:
    """Residues with a heavy ATOM-record atom within ``cutoff`` of any ligand heavy atom."""
    if not cutoff > 0:
        raise ValueError("cutoff must be positive")
    table = structure.residue_table
    lig = ligand.coords
    near = np.zeros(len(table.keys), dtype=bool)
    if len(table.atom_xyz):
        d2 = np.sum((table.atom_xyz[:, None, :] - lig[None, :, :]) ** 2, axis=-1)
        hit = np.any(d2 <= cutoff * cutoff, axis=1)
        near[table.atom_residue[hit]] = True
    near &= ~np.isnan(table.ca[:, 0])
    picked = [(table.names[r], *table.keys[r], tuple(table.ca[r].tolist())) for r in np.flatnonzero(near)]
    if not picked:
        raise EmptySiteError("empty binding site")
    centroid = tuple(np.mean([r[3] for r in picked], axis=0).tolist())
    return BindingSite(
        source=(structure.pdb_id, ligand.ligand_key),
        residues=tuple(picked),
        centroid=centroid,
        protein_centroid=tuple(protein_centroid(structure).tolist()),
    )


def _distances(points: np.ndarray) -> np.ndarray:
    return np.linalg.norm(points[:, None, :] - points[None, :, :], axis=-1)


def build_site_product_graph(a: BindingSite, b: BindingSite, eps: float = 1.0, dmax: float = 15.0,
                             residue_matching: str = "class") -> ProductGraph:
    """Residue pairs of matching class, joined when their intra-site Cα distances agree within ``eps``."""
    la = np.array([_residue_label(n, residue_matching) for n in a.names])
    lb = np.array([_residue_label(n, residue_matching) for n in b.names])
    ii, jj = np.nonzero(la[:, None] == lb[None, :])
    pairs = np.stack([ii, jj], axis=1).astype(np.int64)
    da = _distances(a.ca)[np.ix_(ii, ii)]
    db = _distances(b.ca)[np.ix_(jj, jj)]
    adj = ((ii[:, None] != ii[None, :]) & (jj[:, None] != jj[None, :])
           & (da < dmax) & (db < dmax) & (np.abs(da - db) <= eps))
    return ProductGraph(pairs, adj)


def _unit(v):
    norm = np.linalg.norm(v)
    if norm < 1e-9:
        raise GeometryError("degenerate surface vector")
    return v / norm


def surface_vector_angle(a: BindingSite, b: BindingSite, correspondence, superposition) -> float:
    """Angle (degrees) between the two outward site vectors after superposition.

    The outward vector runs from the protein centroid to the centroid of the
    aligned patch, a cheap stand-in for a surface normal.
    """
    corr = np.asarray(list(correspondence), dtype=np.int64).reshape(-1, 2)
    va = _unit(a.ca[corr[:, 0]].mean(axis=0) - np.asarray(a.protein_centroid))
    vb = _unit(b.ca[corr[:, 1]].mean(axis=0) - np.asarray(b.protein_centroid))
    vb = np.asarray(superposition.rotation) @ vb
    cos = float(np.clip(np.dot(va, vb), -1.0, 1.0))
    return float(np.degrees(np.arccos(cos)))


def align_sites(a: BindingSite, b: BindingSite, params: SiteParams = SiteParams()) -> SiteAlignment:
    product = build_site_product_graph(a, b, params.eps, params.dmax, params.residue_matching)
    clique = max_clique(product)
    corr = tuple(sorted(tuple(product.pairs[k].tolist()) for k in clique))
    if len(corr) < 3:
        return SiteAlignment(corr, None, None, None, False, "too few equivalent points")
    idx = np.asarray(corr, dtype=np.int64)
    try:
        sup = geometry.kabsch(a.ca[idx[:, 0]], b.ca[idx[:, 1]])
    except GeometryError as exc:
        return SiteAlignment(corr, None, None, None, False, str(exc))
    try:
        angle = surface_vector_angle(a, b, corr, sup)
    except GeometryError as exc:
        return SiteAlignment(corr, sup, sup.rmsd, None, False, str(exc))
    accepted = (len(corr) >= params.min_patch and sup.rmsd <= params.patch_rmsd_cutoff
                and angle <= params.angle_cutoff)
    return SiteAlignment(corr, sup, sup.rmsd, angle, accepted)
