"""PDB structures, ligand graphs, and the protein pair task list."""
from __future__ import annotations

import itertools
import logging
import os
import re
import tempfile
import threading
import urllib.error
import urllib.request
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .elements import BOND_TOLERANCE, HYDROGENS, covalent_radius, is_known, normalize_element
from .errors import FetchError, ParseError

logger = logging.getLogger(__name__)

PDB_ID_RE = re.compile(r"^[0-9][a-z0-9]{3}$")
DEFAULT_URL_TEMPLATE = "https://files.rcsb.org/download/{ID}.pdb"
DEFAULT_EXCLUDED = ("HOH",)
DEFAULT_MIN_HEAVY_ATOMS = 6


def normalize_id(pdb_id: str) -> str:
    norm = str(pdb_id).strip().lower()
    if not PDB_ID_RE.match(norm):
        raise ValueError(f"invalid pdb id: {pdb_id!r}")
    return norm


@dataclass(frozen=True)
class Atom:
    serial: int
    name: str
    element: str
    residue_name: str
    chain: str
    residue_seq: int
    position: tuple[float, float, float]
    is_hetatm: bool = False

    @property
    def residue_key(self):
        return (self.residue_name, self.chain, self.residue_seq)

    @property
    def is_hydrogen(self) -> bool:
        return self.element in HYDROGENS


@dataclass(frozen=True)
class Structure:
    pdb_id: str
    atoms: tuple[Atom, ...]
    conect: tuple[tuple[int, int], ...] = ()

    @cached_property
    def coords(self) -> np.ndarray:
        xyz = np.array([a.position for a in self.atoms], dtype=float).reshape(-1, 3)
        xyz.flags.writeable = False
        return xyz

    @cached_property
    def residue_table(self) -> "ResidueTable":
        """Heavy ATOM-record atoms grouped by residue, in (chain, seq) order."""
        groups: dict = {}
        for a in self.atoms:
            if a.is_hetatm or a.is_hydrogen:
                continue
            entry = groups.setdefault((a.chain, a.residue_seq), [a.residue_name, None, []])
            if entry[1] is None and a.name.strip() == "CA":
                entry[1] = a.position
            entry[2].append(a.position)
        keys = sorted(groups)
        ca = np.full((len(keys), 3), np.nan)
        owner, xyz = [], []
        for r, key in enumerate(keys):
            name, pos, pts = groups[key]
            if pos is not None:
                ca[r] = pos
            owner.extend([r] * len(pts))
            xyz.extend(pts)
        return ResidueTable(
            keys=tuple(keys),
            names=tuple(groups[k][0] for k in keys),
            ca=ca,
            atom_xyz=np.asarray(xyz, dtype=float).reshape(-1, 3),
            atom_residue=np.asarray(owner, dtype=np.int64),
        )


@dataclass(frozen=True)
class ResidueTable:
    keys: tuple
    names: tuple
    ca: np.ndarray
    atom_xyz: np.ndarray
    atom_residue: np.ndarray


@dataclass(frozen=True)
class MolecularGraph:
    """Element-labelled heavy-atom graph of one ligand.

    Vertex ``i`` is ``elements[i]`` located at ``positions[i]``; edges are
    unordered index pairs stored as ``(low, high)``.
    """

    ligand_key: tuple[str, str, int]
    elements: tuple[str, ...]
    edges: frozenset
    positions: tuple[tuple[float, float, float], ...]
    serials: tuple[int, ...] = ()

    def __post_init__(self):
        n = len(self.elements)
        if n < 1:
            raise ValueError("molecular graph needs at least one vertex")
        if len(self.positions) != n:
            raise ValueError("one position per vertex required")
        for i, j in self.edges:
            if not (0 <= i < j < n):
                raise ValueError(f"bad edge {(i, j)} for {n} vertices")

    @property
    def vertices(self):
        return list(enumerate(self.elements))

    def __len__(self):
        return len(self.elements)

    @cached_property
    def adjacency(self) -> np.ndarray:
        adj = np.zeros((len(self), len(self)), dtype=bool)
        for i, j in self.edges:
            adj[i, j] = adj[j, i] = True
        adj.flags.writeable = False
        return adj

    @cached_property
    def coords(self) -> np.ndarray:
        xyz = np.array(self.positions, dtype=float).reshape(-1, 3)
        xyz.flags.writeable = False
        return xyz

    @property
    def formula(self) -> tuple[tuple[str, int], ...]:
        """Element multiset as sorted (element, count) pairs."""
        return tuple(sorted(Counter(self.elements).items()))

    @property
    def key_str(self) -> str:
        res, chain, seq = self.ligand_key
        return f"{res}:{chain}:{seq}"


@dataclass(frozen=True)
class PairTask:
    index: int
    id_a: str
    id_b: str

    def __post_init__(self):
        # Equal ids are allowed so a structure can be compared with itself.
        if self.id_a > self.id_b:
            raise ValueError(f"pair ids out of order: {self.id_a} > {self.id_b}")


def unique_pairs(ids) -> list[PairTask]:
    """All unordered pairs of distinct ids, in lexicographic order."""
    norm = sorted({normalize_id(i) for i in ids})
    if not norm:
        raise ValueError("no ids")
    return [PairTask(k, a, b) for k, (a, b) in enumerate(itertools.combinations(norm, 2))]


# --- parsing -----------------------------------------------------------------

def _element_for(raw_name: str, element_field: str) -> str:
    symbol = normalize_element(element_field)
    if symbol:
        if not is_known(symbol):
            raise ParseError(f"unknown element: {symbol}")
        return symbol
    letters = re.match(r"\d*([A-Za-z]*)", raw_name.strip()).group(1).upper()
    if not letters:
        raise ParseError(f"unknown element: atom name {raw_name.strip()!r}")
    # A blank column 13 means a one-letter element right-justified in 13-14.
    if raw_name[:1] in (" ", "") or raw_name[:1].isdigit():
        candidates = (letters[:1],)
    else:
        candidates = (letters[:2], letters[:1])
    for c in candidates:
        if is_known(c):
            return c
    raise ParseError(f"unknown element: {letters}")


def _parse_atom_line(line: str, lineno: int) -> Atom:
    if len(line) < 54:
        raise ParseError(f"malformed record at line {lineno}")
    try:
        serial = int(line[6:11])
        resseq = int(line[22:26])
        pos = (float(line[30:38]), float(line[38:46]), float(line[46:54]))
    except ValueError:
        raise ParseError(f"malformed record at line {lineno}") from None
    if not all(np.isfinite(pos)):
        raise ParseError(f"malformed record at line {lineno}")
    name = line[12:16]
    element = _element_for(name, line[76:78] if len(line) > 76 else "")
    return Atom(
        serial=serial,
        name=name,
        element=element,
        residue_name=line[17:20].strip(),
        chain=line[21:22] if len(line) > 21 else " ",
        residue_seq=resseq,
        position=pos,
        is_hetatm=line.startswith("HETATM"),
    )


def _parse_conect(line: str):
    fields = [line[k:k + 5] for k in range(6, 31, 5)]
    nums = [int(f) for f in fields if f.strip()]
    if len(nums) < 2:
        return []
    src = nums[0]
    return [(min(src, b), max(src, b)) for b in nums[1:] if b != src]


def parse_pdb(text: str, pdb_id: str | None = None) -> Structure:
    """Parse ATOM/HETATM/CONECT records of the first model in a PDB file.

    Alternate locations other than blank/'A' are dropped. ``pdb_id`` defaults
    to the HEADER id code, or ``"0000"`` when there is none.
    """
    atoms = []
    conect = set()
    header_id = None
    models_seen = 0
    in_first_model = True
    for lineno, line in enumerate(text.splitlines(), start=1):
        record = line[:6]
        if record == "HEADER" and len(line) >= 66 and line[62:66].strip():
            header_id = line[62:66]
        elif record == "MODEL ":
            models_seen += 1
            in_first_model = models_seen == 1
        elif record == "ENDMDL":
            in_first_model = False
        elif record in ("ATOM  ", "HETATM"):
            if not in_first_model:
                continue
            if len(line) > 16 and line[16] not in (" ", "A"):
                continue
            atoms.append(_parse_atom_line(line, lineno))
        elif record == "CONECT":
            try:
                conect.update(_parse_conect(line))
            except ValueError:
                raise ParseError(f"malformed record at line {lineno}") from None

    serials = {a.serial for a in atoms}
    conect = tuple(sorted(p for p in conect if p[0] in serials and p[1] in serials))
    pid = pdb_id if pdb_id is not None else (header_id or "0000")
    return Structure(pdb_id=normalize_id(pid), atoms=tuple(atoms), conect=conect)


def format_pdb(structure: Structure) -> str:
    """Serialize back to fixed-column PDB text (round-trips through parse_pdb)."""
    lines = [f"HEADER    {'':52}{structure.pdb_id.upper():4}"]
    for a in structure.atoms:
        record = "HETATM" if a.is_hetatm else "ATOM  "
        x, y, z = a.position
        lines.append(
            f"{record}{a.serial:5d} {a.name:4} {a.residue_name:>3} {a.chain:1}{a.residue_seq:4d}    "
            f"{x:8.3f}{y:8.3f}{z:8.3f}{1.0:6.2f}{0.0:6.2f}          {a.element:>2}"
        )
    for i, j in structure.conect:
        lines.append(f"CONECT{i:5d}{j:5d}")
    lines.append("END")
    return "\n".join(lines) + "\n"


# --- ligands -----------------------------------------------------------------

def perceive_bonds(atoms, conect=()) -> frozenset:
    """Bonds between the heavy atoms of one ligand group.

    Returned indices refer to the heavy atoms in input order. CONECT pairs
    inside the group win outright; otherwise atoms closer than the sum of
    covalent radii plus the tolerance are bonded.
    """
    heavy = [a for a in atoms if not a.is_hydrogen]
    index_of = {a.serial: i for i, a in enumerate(heavy)}
    explicit = set()
    for s1, s2 in conect:
        if s1 in index_of and s2 in index_of and s1 != s2:
            i, j = sorted((index_of[s1], index_of[s2]))
            explicit.add((i, j))
    if explicit:
        return frozenset(explicit)
    if len(heavy) < 2:
        return frozenset()
    xyz = np.array([a.position for a in heavy], dtype=float)
    radii = np.array([covalent_radius(a.element) for a in heavy])
    dist = np.linalg.norm(xyz[:, None, :] - xyz[None, :, :], axis=-1)
    limit = radii[:, None] + radii[None, :] + BOND_TOLERANCE
    ii, jj = np.nonzero(np.triu(dist <= limit, k=1))
    return frozenset(zip(ii.tolist(), jj.tolist()))


def ligand_groups(structure: Structure) -> dict:
    groups = {}
    for a in structure.atoms:
        if a.is_hetatm:
            groups.setdefault(a.residue_key, []).append(a)
    return groups


def extract_ligands(structure: Structure, exclude=DEFAULT_EXCLUDED,
                    min_heavy_atoms: int = DEFAULT_MIN_HEAVY_ATOMS) -> list[MolecularGraph]:
    """HETATM groups that pass the exclusion list and the heavy-atom minimum."""
    excluded = {e.upper() for e in exclude}
    out = []
    for key, atoms in ligand_groups(structure).items():
        if key[0].upper() in excluded:
            continue
        heavy = sorted((a for a in atoms if not a.is_hydrogen), key=lambda a: a.serial)
        if len(heavy) < min_heavy_atoms:
            continue
        edges = perceive_bonds(heavy, structure.conect)
        out.append(MolecularGraph(
            ligand_key=key,
            elements=tuple(a.element for a in heavy),
            edges=edges,
            positions=tuple(a.position for a in heavy),
            serials=tuple(a.serial for a in heavy),
        ))
    out.sort(key=lambda g: (g.ligand_key[1], g.ligand_key[2], g.ligand_key[0]))
    return out


# --- fetching ----------------------------------------------------------------

def default_cache_dir() -> Path:
    return Path(os.environ.get("BSS_CACHE_DIR", Path.home() / ".cache" / "bss"))


def default_url_template() -> str:
    return os.environ.get("BSS_PDB_URL", DEFAULT_URL_TEMPLATE)


_fetch_locks: dict[str, threading.Lock] = {}
_fetch_locks_guard = threading.Lock()


def _lock_for(path: Path) -> threading.Lock:
    with _fetch_locks_guard:
        return _fetch_locks.setdefault(str(path), threading.Lock())


def fetch_structure(pdb_id: str, cache_dir=None, *, offline: bool = False,
                    url_template: str | None = None, timeout: float = 30.0) -> Path:
    """Path to ``{cache_dir}/{id}.pdb``, downloading it on a cache miss."""
    pid = normalize_id(pdb_id)
    cache = Path(cache_dir) if cache_dir is not None else default_cache_dir()
    path = cache / f"{pid}.pdb"
    with _lock_for(path):
        if path.exists():
            return path
        if offline:
            raise FetchError(f"fetch failed: {pid} (offline, not cached)")
        template = url_template or default_url_template()
        url = template.format(ID=pid.upper(), id=pid)
        logger.info("downloading %s", url)
        try:
            with urllib.request.urlopen(url, timeout=timeout) as resp:
                payload = resp.read()
        except urllib.error.HTTPError as exc:
            if exc.code == 404:
                raise FetchError(f"unknown pdb id: {pid}") from None
            raise FetchError(f"fetch failed: {pid} (HTTP {exc.code})") from None
        except (urllib.error.URLError, OSError) as exc:
            raise FetchError(f"fetch failed: {pid} ({exc})") from None
        cache.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=cache, prefix=f".{pid}.", suffix=".part")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(payload)
            os.replace(tmp, path)
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise
        return path


class StructureStore:
    """Thread-safe, memoizing access to parsed structures and their ligands."""

    def __init__(self, cache_dir=None, *, offline: bool = False, url_template: str | None = None,
                 exclude=DEFAULT_EXCLUDED, min_heavy_atoms: int = DEFAULT_MIN_HEAVY_ATOMS):
        self.cache_dir = Path(cache_dir) if cache_dir is not None else default_cache_dir()
        self.offline = offline
        self.url_template = url_template
        self.exclude = tuple(exclude)
        self.min_heavy_atoms = min_heavy_atoms
        self._lock = threading.Lock()
        self._entries: dict[str, tuple] = {}
        self._id_locks: dict[str, threading.Lock] = {}

    def _load(self, pid):
        path = fetch_structure(pid, self.cache_dir, offline=self.offline, url_template=self.url_template)
        structure = parse_pdb(path.read_text(), pdb_id=pid)
        ligands = extract_ligands(structure, self.exclude, self.min_heavy_atoms)
        return structure, tuple(ligands)

    def get(self, pdb_id: str):
        """``(structure, ligands)`` for one id."""
        pid = normalize_id(pdb_id)
        with self._lock:
            if pid in self._entries:
                return self._entries[pid]
            id_lock = self._id_locks.setdefault(pid, threading.Lock())
        with id_lock:
            with self._lock:
                if pid in self._entries:
                    return self._entries[pid]
            entry = self._load(pid)
            with self._lock:
                self._entries[pid] = entry
            return entry
