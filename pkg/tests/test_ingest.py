import http.server
import itertools
import random
import threading

import numpy as np
import pytest

from bss import ingest
from bss.errors import FetchError, ParseError
from bss.ingest import (PairTask, StructureStore, extract_ligands, fetch_structure, format_pdb, normalize_id,
                        parse_pdb, perceive_bonds, unique_pairs)
from bss.synthetic import CORPUS_IDS, bundled_corpus_dir

from conftest import atom

STUDY_IDS = ["1iei", "1z89", "3p2v", "3kwb", "2bdl", "2auz"]


def pdb_line(record, serial, name, resname, chain, seq, xyz, element=""):
    x, y, z = xyz
    return (f"{record:<6}{serial:5d} {name:4} {resname:>3} {chain}{seq:4d}    "
            f"{x:8.3f}{y:8.3f}{z:8.3f}{1.0:6.2f}{0.0:6.2f}          {element:>2}")


# --- pairs -------------------------------------------------------------------

def test_six_ids_give_15_pairs():
    tasks = unique_pairs(STUDY_IDS)
    assert len(tasks) == 15
    assert [t.index for t in tasks] == list(range(15))
    assert all(t.id_a < t.id_b for t in tasks)
    assert [(t.id_a, t.id_b) for t in tasks] == sorted((t.id_a, t.id_b) for t in tasks)


def test_single_id_gives_no_pairs():
    assert unique_pairs(["1abc"]) == []


def test_four_ids_enumerated():
    ids = ["4xyz", "1abc", "2def", "3ghi"]
    got = [(t.id_a, t.id_b) for t in unique_pairs(ids)]
    brute = sorted({tuple(sorted((a, b))) for a in ids for b in ids if a != b})
    assert got == brute
    assert len(got) == 6


@pytest.mark.parametrize("n", [1, 2, 3, 7, 19, 50])
def test_pair_count_formula(n):
    rnd = random.Random(n)
    ids = set()
    while len(ids) < n:
        ids.add(str(rnd.randint(1, 9)) + "".join(rnd.choice("abcdefghijklmnopqrstuvwxyz0123456789")
                                                 for _ in range(3)))
    ids = list(ids)
    # duplicates after case normalization collapse
    noisy = ids + [i.upper() for i in ids[: n // 2]]
    assert len(unique_pairs(noisy)) == n * (n - 1) // 2


def test_unique_pairs_errors():
    with pytest.raises(ValueError, match="no ids"):
        unique_pairs([])
    with pytest.raises(ValueError):
        unique_pairs(["not-an-id"])


def test_normalize_id():
    assert normalize_id(" 1IEI ") == "1iei"
    for bad in ("iei1", "1ie", "1ie!", ""):
        with pytest.raises(ValueError):
            normalize_id(bad)


def test_pair_task_order_invariant():
    PairTask(0, "1abc", "2abc")
    PairTask(0, "1abc", "1abc")
    with pytest.raises(ValueError):
        PairTask(0, "2abc", "1abc")


# --- parsing -----------------------------------------------------------------

def test_single_atom_line():
    s = parse_pdb(pdb_line("ATOM", 1, " CA ", "ALA", "A", 1, (11.104, 6.134, -6.504), "C"))
    assert len(s.atoms) == 1
    a = s.atoms[0]
    assert (a.serial, a.element, a.residue_name, a.chain, a.residue_seq) == (1, "C", "ALA", "A", 1)
    assert a.position == (11.104, 6.134, -6.504)
    assert a.is_hetatm is False


def test_malformed_record():
    text = "HEADER\n" + "ATOM      1  CA  ALA A   1      bad"
    with pytest.raises(ParseError, match="malformed record at line 2"):
        parse_pdb(text)
    bad_coord = pdb_line("ATOM", 1, " CA ", "ALA", "A", 1, (1, 2, 3), "C")
    bad_coord = bad_coord[:30] + "  abc.de" + bad_coord[38:]
    with pytest.raises(ParseError, match="malformed record at line 1"):
        parse_pdb(bad_coord)


def test_unknown_element():
    with pytest.raises(ParseError, match="unknown element"):
        parse_pdb(pdb_line("HETATM", 1, " X1 ", "LIG", "A", 1, (0, 0, 0), "XX"))


@pytest.mark.parametrize("name,expected", [(" CA ", "C"), ("CA  ", "CA"), (" OG1", "O"), ("FE  ", "FE"),
                                           ("1HB ", "H"), (" N  ", "N")])
def test_element_from_atom_name(name, expected):
    s = parse_pdb(pdb_line("HETATM", 1, name, "LIG", "A", 1, (0, 0, 0), ""))
    assert s.atoms[0].element == expected


def test_other_records_ignored_and_first_model_only():
    lines = [
        "HEADER    TEST" + " " * 48 + "1TST",
        "REMARK   2 RESOLUTION.",
        "MODEL        1",
        pdb_line("ATOM", 1, " N  ", "GLY", "A", 1, (0, 0, 0), "N"),
        "ENDMDL",
        "MODEL        2",
        pdb_line("ATOM", 1, " N  ", "GLY", "A", 1, (5, 5, 5), "N"),
        pdb_line("ATOM", 2, " CA ", "GLY", "A", 1, (5, 6, 5), "C"),
        "ENDMDL",
    ]
    s = parse_pdb("\n".join(lines))
    assert s.pdb_id == "1tst"
    assert [a.position for a in s.atoms] == [(0.0, 0.0, 0.0)]


def test_altloc_keeps_blank_and_a():
    line_a = pdb_line("ATOM", 1, " CB ", "SER", "A", 3, (1, 0, 0), "C")
    line_b = pdb_line("ATOM", 2, " CB ", "SER", "A", 3, (2, 0, 0), "C")
    line_a = line_a[:16] + "A" + line_a[17:]
    line_b = line_b[:16] + "B" + line_b[17:]
    s = parse_pdb(line_a + "\n" + line_b)
    assert [a.serial for a in s.atoms] == [1]


def test_fixture_two_het_groups():
    lines = [pdb_line("ATOM", 1, " CA ", "ALA", "A", 1, (0, 0, 0), "C"),
             pdb_line("ATOM", 2, " CA ", "GLY", "A", 2, (3.8, 0, 0), "C")]
    serial = 3
    for resname, seq in (("BZA", 901), ("NPL", 902)):
        for k in range(6):
            lines.append(pdb_line("HETATM", serial, f" C{k + 1} ", resname, "A", seq, (10 + seq, k * 1.4, 0), "C"))
            serial += 1
    s = parse_pdb("\n".join(lines))
    assert len(ingest.ligand_groups(s)) == 2
    assert len(extract_ligands(s)) == 2


def test_round_trip_is_identity():
    for pid in CORPUS_IDS:
        s = parse_pdb((bundled_corpus_dir() / f"{pid}.pdb").read_text())
        again = parse_pdb(format_pdb(s))
        assert again == s


def test_parse_total_on_bundled_corpus():
    for path in sorted(bundled_corpus_dir().glob("*.pdb")):
        s = parse_pdb(path.read_text())
        assert s.pdb_id == path.stem
        assert len(s.atoms) > 100


# --- bonds -------------------------------------------------------------------

def test_cc_bond_threshold():
    bonded = [atom(1, " C1 ", "C", (0, 0, 0)), atom(2, " C2 ", "C", (1.54, 0, 0))]
    apart = [atom(1, " C1 ", "C", (0, 0, 0)), atom(2, " C2 ", "C", (2.50, 0, 0))]
    assert perceive_bonds(bonded) == {(0, 1)}
    assert perceive_bonds(apart) == frozenset()
    edge = [atom(1, " C1 ", "C", (0, 0, 0)), atom(2, " C2 ", "C", (1.94, 0, 0))]
    assert perceive_bonds(edge) == {(0, 1)}


def test_conect_overrides_distances():
    atoms = [atom(10, " C1 ", "C", (0, 0, 0)), atom(11, " C2 ", "C", (1.5, 0, 0)),
             atom(12, " C3 ", "C", (9.0, 0, 0))]
    assert perceive_bonds(atoms, conect=[(10, 12)]) == {(0, 2)}
    # pairs outside the group are ignored
    assert perceive_bonds(atoms, conect=[(10, 99)]) == {(0, 1)}


def test_hydrogens_excluded_before_perception():
    atoms = [atom(1, " C1 ", "C", (0, 0, 0)), atom(2, " H1 ", "H", (1.0, 0, 0)),
             atom(3, " C2 ", "C", (1.5, 0, 0))]
    assert perceive_bonds(atoms) == {(0, 1)}


def test_bonds_symmetric_no_self_loops(rng):
    atoms = [atom(i + 1, f" C{i + 1:<2}", "C", rng.uniform(0, 4, size=3)) for i in range(25)]
    edges = perceive_bonds(atoms)
    xyz = np.array([a.position for a in atoms])
    for i, j in itertools.combinations(range(25), 2):
        assert ((i, j) in edges) == (np.linalg.norm(xyz[i] - xyz[j]) <= 1.94)
    assert all(i < j for i, j in edges)


# --- ligands -----------------------------------------------------------------

def _structure(groups, waters=0):
    lines, serial = [pdb_line("ATOM", 1, " CA ", "ALA", "A", 1, (0, 0, 0), "C")], 2
    for resname, seq, n in groups:
        for k in range(n):
            lines.append(pdb_line("HETATM", serial, f" C{k + 1:<2}", resname, "B", seq, (20 + k * 1.4, seq, 0), "C"))
            serial += 1
    for w in range(waters):
        lines.append(pdb_line("HETATM", serial, " O  ", "HOH", "A", 500 + w, (0, 30 + 3 * w, 0), "O"))
        serial += 1
    return parse_pdb("\n".join(lines))


def test_only_water_gives_no_ligands():
    assert extract_ligands(_structure([], waters=5)) == []


def test_twenty_atom_group():
    ligs = extract_ligands(_structure([("BIG", 7, 20)]))
    assert len(ligs) == 1 and len(ligs[0]) == 20
    assert ligs[0].ligand_key == ("BIG", "B", 7)


def test_small_group_dropped():
    assert extract_ligands(_structure([("SML", 3, 3)])) == []
    assert len(extract_ligands(_structure([("SML", 3, 3)]), min_heavy_atoms=3)) == 1


def test_ligand_order_and_determinism():
    s = _structure([("ZZZ", 9, 6), ("AAA", 2, 7), ("MMM", 5, 6)])
    keys = [g.ligand_key for g in extract_ligands(s)]
    assert keys == [("AAA", "B", 2), ("MMM", "B", 5), ("ZZZ", "B", 9)]
    shuffled = list(s.atoms)
    random.Random(3).shuffle(shuffled)
    s2 = ingest.Structure(s.pdb_id, tuple(shuffled), s.conect)
    assert extract_ligands(s2) == extract_ligands(s)


def test_bundled_corpus_ligands(corpus_store):
    _, ligs = corpus_store.get("9s04")
    # SO4 (5 atoms), ZN and waters are filtered out
    assert [g.ligand_key[0] for g in ligs] == ["BZA", "ETB"]
    _, ligs = corpus_store.get("9s02")
    # hydrogens written to the file never become vertices
    assert all("H" not in g.elements for g in ligs)


# --- fetch -------------------------------------------------------------------

class _Stub(http.server.BaseHTTPRequestHandler):
    hits: list = []
    body = parse_pdb(pdb_line("ATOM", 1, " CA ", "ALA", "A", 1, (0, 0, 0), "C"), "1abc")

    def do_GET(self):
        _Stub.hits.append(self.path)
        if "1ABC" in self.path:
            data = format_pdb(self.body).encode()
            self.send_response(200)
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)
        else:
            self.send_error(404)

    def log_message(self, *args):
        pass


@pytest.fixture
def stub_server():
    _Stub.hits = []
    server = http.server.ThreadingHTTPServer(("127.0.0.1", 0), _Stub)
    t = threading.Thread(target=server.serve_forever, daemon=True)
    t.start()
    yield f"http://127.0.0.1:{server.server_address[1]}/{{ID}}.pdb"
    server.shutdown()
    server.server_close()


def test_fetch_then_cache_hit(tmp_path, stub_server):
    path = fetch_structure("1abc", tmp_path, url_template=stub_server)
    assert path == tmp_path / "1abc.pdb" and path.exists()
    assert _Stub.hits == ["/1ABC.pdb"]
    assert fetch_structure("1ABC", tmp_path, url_template=stub_server) == path
    assert _Stub.hits == ["/1ABC.pdb"]
    assert parse_pdb(path.read_text()).atoms == _Stub.body.atoms
    assert not list(tmp_path.glob("*.tmp*"))


def test_fetch_404(tmp_path, stub_server):
    with pytest.raises(FetchError, match="unknown pdb id"):
        fetch_structure("2abc", tmp_path, url_template=stub_server)
    assert not (tmp_path / "2abc.pdb").exists()


def test_fetch_offline_and_network_failure(tmp_path):
    with pytest.raises(FetchError, match="fetch failed: 1abc"):
        fetch_structure("1abc", tmp_path, offline=True)
    with pytest.raises(FetchError, match="fetch failed: 1abc"):
        fetch_structure("1abc", tmp_path, url_template="http://127.0.0.1:9/{ID}.pdb", timeout=2)


def test_cache_hit_needs_no_network(tmp_path):
    (tmp_path / "1abc.pdb").write_text("END\n")
    assert fetch_structure("1abc", tmp_path, offline=True) == tmp_path / "1abc.pdb"


def test_concurrent_fetch_downloads_once(tmp_path, stub_server):
    store = StructureStore(tmp_path, url_template=stub_server, min_heavy_atoms=1)
    results = []
    threads = [threading.Thread(target=lambda: results.append(store.get("1abc"))) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(results) == 8 and all(r is results[0] for r in results)
    assert _Stub.hits == ["/1ABC.pdb"]
