"""Deterministic synthetic protein-ligand structures.

Used to build the bundled offline corpus and test fixtures. Each protein is a
globule of filler residues with pockets on its surface; a pocket is a shell
of residues around a ligand, opening outward. Pockets built from the same
motif seed are rigid copies (plus noise) of each other, so sharing a motif
makes two binding sites genuinely similar.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ingest import Atom, Structure, format_pdb

AMINO_ACIDS = ("ALA", "ARG", "ASN", "ASP", "CYS", "GLN", "GLU", "GLY", "HIS", "ILE",
               "LEU", "LYS", "MET", "PHE", "PRO", "SER", "THR", "TRP", "TYR", "VAL")
SAME_CLASS_SWAP = {"LEU": "ILE", "ILE": "VAL", "VAL": "LEU", "SER": "THR", "THR": "SER",
                   "ASP": "GLU", "GLU": "ASP", "LYS": "ARG", "ARG": "LYS", "PHE": "TYR", "TYR": "PHE"}

RING = 1.39


def random_rotation(rng) -> np.ndarray:
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


def _hexagon(center=(0.0, 0.0), phase=30.0):
    ang = np.radians(phase + 60.0 * np.arange(6))
    return np.stack([center[0] + RING * np.cos(ang), center[1] + RING * np.sin(ang), np.zeros(6)], axis=1)


def _ring_with_attachment():
    # Vertices at 0, 60, ... degrees; vertex 0 at (+RING, 0) carries the substituent.
    return _hexagon(phase=0.0)


def _template(kind: str):
    """(atom names, elements, coordinates) for a small ligand, centred on its centroid."""
    names, elements, xyz = _raw_template(kind)
    xyz = np.asarray(xyz, dtype=float)
    return list(names), list(elements), xyz - xyz.mean(axis=0)


def _raw_template(kind: str):
    if kind == "BZA":  # benzoic acid, C7 O2
        ring = _ring_with_attachment()
        c7 = np.array([RING + 1.50, 0, 0])
        o1 = c7 + 1.25 * np.array([np.cos(np.radians(60)), np.sin(np.radians(60)), 0])
        o2 = c7 + 1.25 * np.array([np.cos(np.radians(-60)), np.sin(np.radians(-60)), 0])
        xyz = np.vstack([ring, c7, o1, o2])
        names = [f"C{i}" for i in range(1, 8)] + ["O1", "O2"]
        elements = ["C"] * 7 + ["O", "O"]
    elif kind == "ABZ":  # 4-aminobenzoic acid, C7 N O2
        names, elements, xyz = _raw_template("BZA")
        n = np.array([[-RING - 1.40, 0, 0]])
        xyz = np.vstack([xyz, n])
        names, elements = names + ["N1"], elements + ["N"]
    elif kind == "ETB":  # ethylbenzene, C8
        ring = _ring_with_attachment()
        c7 = np.array([RING + 1.51, 0, 0])
        c8 = c7 + 1.53 * np.array([np.cos(np.radians(60)), np.sin(np.radians(60)), 0.3])
        xyz = np.vstack([ring, c7, c8])
        names = [f"C{i}" for i in range(1, 9)]
        elements = ["C"] * 8
    elif kind == "NPL":  # 2-naphthol-like, C10 O
        r1 = _hexagon((0.0, 0.0))
        r2 = _hexagon((2 * RING * np.cos(np.radians(30)), 0.0))
        extra = [k for k in range(6) if k not in (2, 3)]  # ring-2 vertices not shared with ring 1
        o = r1[2] + 1.36 * r1[2] / np.linalg.norm(r1[2])
        xyz = np.vstack([r1, r2[extra], o])
        names = [f"C{i}" for i in range(1, 11)] + ["O1"]
        elements = ["C"] * 10 + ["O"]
    elif kind == "SUL":  # benzenesulfonamide-like, C6 S O2 N
        ring = _ring_with_attachment()
        s = np.array([RING + 1.77, 0, 0])
        o1 = s + 1.43 * np.array([0.3, 0.8, 0.5])
        o2 = s + 1.43 * np.array([0.3, -0.8, 0.5])
        n = s + 1.62 * np.array([0.35, 0.0, -0.94])
        unit = lambda v: v / np.linalg.norm(v)  # noqa: E731
        o1 = s + 1.43 * unit(o1 - s)
        o2 = s + 1.43 * unit(o2 - s)
        n = s + 1.62 * unit(n - s)
        xyz = np.vstack([ring, s, o1, o2, n])
        names = [f"C{i}" for i in range(1, 7)] + ["S1", "O1", "O2", "N1"]
        elements = ["C"] * 6 + ["S", "O", "O", "N"]
    elif kind in FUSED:
        return _fused(*FUSED[kind])
    elif kind == "SO4":
        t = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]]) / np.sqrt(3) * 1.47
        xyz = np.vstack([[0, 0, 0], t])
        names, elements = ["S", "O1", "O2", "O3", "O4"], ["S", "O", "O", "O", "O"]
    else:
        raise ValueError(f"unknown ligand template {kind}")
    return names, elements, xyz


# Planar fused-ring ligands on a hexagonal lattice: (ring cells, substituents).
# A substituent (k, element) sits on the k-th boundary carbon, pointing outward.
FUSED = {
    "FA1": (((0, 0), (1, 0), (0, 1), (1, 1)), ((0, "O"), (3, "N"), (5, "O"), (7, "C"))),
    "FA2": (((0, 0), (1, 0), (2, 0), (1, 1)), ((1, "O"), (3, "N"), (6, "C"), (8, "O"))),
    "FA3": (((0, 0), (1, 0), (2, 0), (3, 0)), ((0, "O"), (4, "N"), (8, "S"))),
    "FA4": (((0, 0), (1, 0), (1, 1), (2, 1)), ((2, "N"), (5, "O"), (7, "O"), (9, "N"))),
    "FA5": (((0, 0), (1, 0), (0, 1), (2, 0)), ((1, "S"), (4, "O"), (6, "O"))),
    "FA6": (((0, 0), (1, 0), (2, 0), (2, 1)), ((0, "N"), (3, "O"), (5, "C"), (9, "O"))),
}


def _fused(cells, substituents):
    pts = []
    for q, r in cells:
        centre = np.array([np.sqrt(3) * RING * (q + r / 2), 1.5 * RING * r])
        for p in _hexagon(centre):
            if not any(np.linalg.norm(p - x) < 0.1 for x in pts):
                pts.append(p)
    pts = np.array(pts)
    d = np.linalg.norm(pts[:, None] - pts[None], axis=-1)
    boundary = np.flatnonzero(np.sum((d > 0.1) & (d < 1.6), axis=1) == 2)
    centre = pts.mean(axis=0)
    extra = []
    for k, _ in substituents:
        i = boundary[k % len(boundary)]
        u = pts[i] - centre
        extra.append(pts[i] + 1.40 * u / np.linalg.norm(u))
    names = [f"C{i}" for i in range(1, len(pts) + 1)]
    elements = ["C"] * len(pts)
    counts: dict = {}
    for _, e in substituents:
        counts[e] = counts.get(e, 0) + 1
        names.append(f"{e}{counts[e] + (len(pts) if e == 'C' else 0)}")
        elements.append(e)
    return names, elements, np.vstack([pts, np.array(extra)])


def _ring_hydrogens(xyz, elements):
    # Ring carbons with only two heavy neighbours get a radial H.
    hs = []
    centre = xyz[:6].mean(axis=0)
    for k in range(6):
        d = np.linalg.norm(xyz - xyz[k], axis=1)
        if np.sum((d > 0.1) & (d < 1.9)) == 2:
            u = xyz[k] - centre
            hs.append(xyz[k] + 1.08 * u / np.linalg.norm(u))
    return np.array(hs).reshape(-1, 3)


@dataclass
class Motif:
    """A pocket: residue names and backbone/CB coordinates around a ligand at the origin."""

    names: list
    atoms: list  # per residue: list of (atom name, element, xyz)
    ligand_rotation: np.ndarray


def make_motif(seed: int, n_residues: int = 20) -> Motif:
    rng = np.random.default_rng(seed)
    cas = []
    while len(cas) < n_residues:
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        if d[2] > 0.35:  # leave the pocket mouth open along +z
            continue
        ca = d * rng.uniform(5.6, 7.1)
        if all(np.linalg.norm(ca - c) >= 3.8 for c in cas):
            cas.append(ca)
    names, atoms = [], []
    for ca in cas:
        name = AMINO_ACIDS[rng.integers(len(AMINO_ACIDS))]
        inward = -ca / np.linalg.norm(ca)
        res = [("N", "N", ca + 1.46 * _outward_dir(rng, inward)),
               ("CA", "C", ca)]
        c = ca + 1.52 * _outward_dir(rng, inward)
        res.append(("C", "C", c))
        res.append(("O", "O", c + 1.23 * _outward_dir(rng, inward)))
        if name != "GLY":
            res.append(("CB", "C", ca + 1.53 * inward))
        names.append(name)
        atoms.append(res)
    return Motif(names, atoms, random_rotation(rng))


def _outward_dir(rng, inward):
    while True:
        v = rng.normal(size=3)
        v /= np.linalg.norm(v)
        if np.dot(v, inward) < -0.2:
            return v


@dataclass
class PocketSpec:
    motif_seed: int
    ligand: str
    copy_seed: int | None = None  # None: the motif as generated; otherwise a noisy copy
    hydrogens: bool = False
    conect: bool = False


@dataclass
class ProteinSpec:
    pdb_id: str
    pockets: list
    seed: int
    waters: int = 0
    extra_het: list = field(default_factory=list)  # small groups such as ("SO4",) or ("ZN",)
    n_filler: int = 140


_POCKET_DIRECTIONS = np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], float)


def _frame_for(direction, spin):
    z = direction / np.linalg.norm(direction)
    helper = np.array([0.0, 0.0, 1.0]) if abs(z[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    x = np.cross(helper, z)
    x /= np.linalg.norm(x)
    y = np.cross(z, x)
    c, s = np.cos(spin), np.sin(spin)
    x, y = c * x + s * y, -s * x + c * y
    return np.stack([x, y, z], axis=1)  # columns: local axes in world frame


def build_protein(spec: ProteinSpec, pocket_radius: float = 16.0) -> Structure:
    rng = np.random.default_rng(spec.seed)
    residues = []  # (name, [(atom, element, xyz)])
    ligands = []  # (resname, [(atom, element, xyz)], conect)
    centres = []
    for k, pocket in enumerate(spec.pockets):
        motif = make_motif(pocket.motif_seed)
        names = list(motif.names)
        atoms = [[(a, e, np.array(x)) for a, e, x in res] for res in motif.atoms]
        lig_names, lig_el, lig_xyz = _template(pocket.ligand)
        lig_xyz = lig_xyz @ motif.ligand_rotation.T
        if pocket.copy_seed is not None:
            crng = np.random.default_rng(pocket.copy_seed)
            for r in range(len(atoms)):
                shift = crng.normal(scale=0.2, size=3)
                atoms[r] = [(a, e, x + shift + crng.normal(scale=0.05, size=3)) for a, e, x in atoms[r]]
            for r in crng.choice(len(names), size=2, replace=False):
                names[r] = SAME_CLASS_SWAP.get(names[r], names[r])
            lig_xyz = lig_xyz + crng.normal(scale=0.1, size=lig_xyz.shape)
        frame = _frame_for(_POCKET_DIRECTIONS[k], rng.uniform(0, 2 * np.pi))
        centre = _POCKET_DIRECTIONS[k] * pocket_radius
        centres.append(centre)
        to_world = lambda x: frame @ x + centre  # noqa: E731
        order = rng.permutation(len(names))
        for r in order:
            residues.append((names[r], [(a, e, to_world(x)) for a, e, x in atoms[r]]))
        lig_atoms = [(n, e, to_world(x)) for n, e, x in zip(lig_names, lig_el, lig_xyz)]
        if pocket.hydrogens:
            hs = _ring_hydrogens(lig_xyz, lig_el)
            lig_atoms += [(f"H{i + 1}", "H", to_world(h)) for i, h in enumerate(hs)]
        ligands.append((pocket.ligand, lig_atoms, pocket.conect))

    fill = []
    tries = 0
    while len(fill) < spec.n_filler and tries < 200000:
        tries += 1
        ca = rng.uniform(-19, 19, size=3)
        if np.linalg.norm(ca) > 19:
            continue
        if any(np.linalg.norm(ca - c) < 13.0 for c in centres):
            continue
        if all(np.linalg.norm(ca - f) >= 3.8 for f in fill):
            fill.append(ca)
    for ca in fill:
        name = AMINO_ACIDS[rng.integers(len(AMINO_ACIDS))]
        res = [("N", "N", ca + 1.46 * _unit(rng.normal(size=3))), ("CA", "C", ca)]
        c = ca + 1.52 * _unit(rng.normal(size=3))
        res += [("C", "C", c), ("O", "O", c + 1.23 * _unit(rng.normal(size=3)))]
        if name != "GLY":
            res.append(("CB", "C", ca + 1.53 * _unit(rng.normal(size=3))))
        residues.append((name, res))

    # Interleave so pocket residues are not contiguous in sequence.
    order = rng.permutation(len(residues))
    atoms, conect = [], []
    serial = 1
    for seq, r in enumerate(order, start=1):
        name, res = residues[r]
        for a, e, x in res:
            atoms.append(Atom(serial, _pdb_name(a, e), e, name, "A", seq, _r3(x), False))
            serial += 1
    het_seq = 901
    for resname, lig_atoms, with_conect in ligands:
        first = serial
        for a, e, x in lig_atoms:
            atoms.append(Atom(serial, _pdb_name(a, e), e, resname, "A", het_seq, _r3(x), True))
            serial += 1
        if with_conect:
            heavy = [(first + i, x) for i, (a, e, x) in enumerate(lig_atoms) if e != "H"]
            for (s1, x1), (s2, x2) in _pairs(heavy):
                if np.linalg.norm(x1 - x2) < 1.9:
                    conect.append((s1, s2))
        het_seq += 1
    for group in spec.extra_het:
        if group == "SO4":
            names, els, xyz = _template("SO4")
            pos = rng.uniform(-5, 5, size=3) + np.array([0, 0, 30.0])
            for a, e, x in zip(names, els, xyz + pos):
                atoms.append(Atom(serial, _pdb_name(a, e), e, "SO4", "A", het_seq, _r3(x), True))
                serial += 1
        else:
            pos = rng.uniform(-5, 5, size=3) + np.array([0, 30.0, 0])
            atoms.append(Atom(serial, _pdb_name(group, group), group, group, "A", het_seq, _r3(pos), True))
            serial += 1
        het_seq += 1
    for w in range(spec.waters):
        pos = _unit(rng.normal(size=3)) * rng.uniform(24, 28)
        atoms.append(Atom(serial, " O  ", "O", "HOH", "A", 1001 + w, _r3(pos), True))
        serial += 1
    return Structure(spec.pdb_id, tuple(atoms), tuple(sorted(conect)))


def _pairs(items):
    for i in range(len(items)):
        for j in range(i + 1, len(items)):
            yield items[i], items[j]


def _unit(v):
    return v / np.linalg.norm(v)


def _r3(x):
    return tuple(round(float(v), 3) for v in x)


def _pdb_name(name: str, element: str) -> str:
    if len(element) == 1 and len(name) < 4:
        return f" {name:<3}"
    return f"{name:<4}"


CORPUS = (
    ProteinSpec("9s01", [PocketSpec(11, "BZA"), PocketSpec(12, "NPL")], seed=101, waters=6),
    ProteinSpec("9s02", [PocketSpec(11, "BZA", copy_seed=21, hydrogens=True), PocketSpec(14, "ETB")], seed=102),
    ProteinSpec("9s03", [PocketSpec(13, "ABZ"), PocketSpec(12, "NPL", copy_seed=22, conect=True)], seed=103),
    ProteinSpec("9s04", [PocketSpec(15, "BZA"), PocketSpec(16, "ETB")], seed=104,
                extra_het=["SO4", "ZN"], waters=4),
    ProteinSpec("9s05", [PocketSpec(12, "NPL", copy_seed=23), PocketSpec(13, "ABZ", copy_seed=24)],
                seed=105, waters=5),
    ProteinSpec("9s06", [PocketSpec(16, "ETB", copy_seed=25), PocketSpec(11, "ABZ", copy_seed=26),
                         PocketSpec(17, "SUL")], seed=106),
)

CORPUS_IDS = tuple(spec.pdb_id for spec in CORPUS)

# Every cross pair lacks an identical formula, so each comparison runs the
# MCS search: a CPU-bound corpus for scaling measurements.
LOAD_CORPUS = (
    ProteinSpec("9l01", [PocketSpec(31, "FA1")], seed=201),
    ProteinSpec("9l02", [PocketSpec(31, "FA2", copy_seed=41)], seed=202),
    ProteinSpec("9l03", [PocketSpec(32, "FA3")], seed=203),
    ProteinSpec("9l04", [PocketSpec(32, "FA4", copy_seed=42)], seed=204),
    ProteinSpec("9l05", [PocketSpec(33, "FA5")], seed=205),
    ProteinSpec("9l06", [PocketSpec(31, "FA6", copy_seed=43)], seed=206),
)

LOAD_CORPUS_IDS = tuple(spec.pdb_id for spec in LOAD_CORPUS)


def write_corpus(dest, specs=CORPUS):
    """Write one ``{id}.pdb`` per spec into ``dest``; returns the paths."""
    from pathlib import Path

    dest = Path(dest)
    dest.mkdir(parents=True, exist_ok=True)
    paths = []
    for spec in specs:
        path = dest / f"{spec.pdb_id}.pdb"
        path.write_text(format_pdb(build_protein(spec)))
        paths.append(path)
    return paths


def bundled_corpus_dir():
    """Directory holding the pre-generated ``CORPUS`` and ``LOAD_CORPUS`` files."""
    from pathlib import Path

    return Path(__file__).resolve().parent / "data" / "corpus"
