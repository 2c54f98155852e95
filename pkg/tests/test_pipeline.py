import json
import threading

import pytest

from bss import pipeline
from bss.ingest import PairTask, StructureStore, format_pdb, parse_pdb
from bss.pipeline import (BssPipeline, CandidateResult, PairStatus, PipelineParams, comparable, run_corpus,
                          run_pair)
from bss.synthetic import CORPUS_IDS, PocketSpec, ProteinSpec, build_protein, write_corpus
from bss.taskfarm import FarmConfig, TaskOutcome


@pytest.fixture(scope="module")
def fixture_run(corpus_store):
    return run_corpus(CORPUS_IDS, FarmConfig(), corpus_store)


@pytest.fixture(scope="module")
def custom_store(tmp_path_factory):
    root = tmp_path_factory.mktemp("custom")
    specs = [
        ProteinSpec("8t01", [PocketSpec(11, "BZA")], seed=301),
        # two candidates of identical chemistry; only the first sits in a copy of 8t01's pocket
        ProteinSpec("8t02", [PocketSpec(11, "BZA", copy_seed=51), PocketSpec(15, "BZA")], seed=302),
    ]
    write_corpus(root, specs)
    water_only = build_protein(ProteinSpec("8w01", [], seed=303, waters=8))
    (root / "8w01.pdb").write_text(format_pdb(water_only))
    return StructureStore(root, offline=True)


def test_self_pair_is_similar(corpus_store):
    for pid in CORPUS_IDS:
        r = run_pair(PairTask(0, pid, pid), corpus_store)
        assert r.status is PairStatus.SIMILAR
        assert r.tanimoto == 1.0
        assert abs(r.ligand_rmsd) < 1e-6


def test_water_only_structure_has_no_shared_chemistry(custom_store):
    s, ligs = custom_store.get("8w01")
    assert ligs == () and any(a.residue_name == "HOH" for a in s.atoms)
    r = run_pair(PairTask(0, "8t01", "8w01"), custom_store)
    assert r.status is PairStatus.NO_SHARED_CHEMISTRY
    assert r.best_ligand_pair is None and r.candidates == []
    assert r.timing.find_iso_calls == r.timing.find_mcs_calls == 0


def test_tie_break_prefers_lower_ligand_rmsd(custom_store):
    r = run_pair(PairTask(0, "8t01", "8t02"), custom_store)
    assert len(r.candidates) == 2
    assert all(c.tanimoto == 1.0 for c in r.candidates)
    assert r.best_ligand_pair == (("BZA", "A", 901), ("BZA", "A", 901))
    other = [c for c in r.candidates if c is not r.best][0]
    assert r.best.ligand_rmsd < other.ligand_rmsd
    assert r.status is PairStatus.SIMILAR


def _cand(key_b, tanimoto, rmsd, accepted=True):
    site = {"size": 12, "patch_rmsd": 0.3, "surface_vector_angle": 5.0, "accepted": accepted, "note": ""}
    return CandidateResult(("LIG", "A", 1), ("LIG", "A", key_b), "Isomorphic" if tanimoto == 1 else "CommonSubgraph",
                           6, tanimoto, 1, site, ligand_rmsd=rmsd)


def _finish(cands, params=PipelineParams()):
    pipe = BssPipeline(store=None, params=params)
    state = pipeline._PairState(PairTask(0, "1aaa", "1bbb"), 0.0)
    return pipe.finish(state, [TaskOutcome(k, 0, value=c) for k, c in enumerate(cands)])


def test_winner_rule_order():
    r = _finish([_cand(1, 1.0, 3.0), _cand(2, 1.0, 0.5)])
    assert r.best.ligand_b == ("LIG", "A", 2)
    assert r.status is PairStatus.SIMILAR
    # similarity first: a worse RMSD with higher tanimoto still wins
    r = _finish([_cand(1, 0.8, 0.1), _cand(2, 1.0, 3.0)])
    assert r.best.ligand_b == ("LIG", "A", 2) and r.status is PairStatus.NOT_SIMILAR
    # full tie: lexicographic ligand key
    r = _finish([_cand(3, 1.0, 0.5), _cand(2, 1.0, 0.5)])
    assert r.best.ligand_b == ("LIG", "A", 2)
    # missing RMSD ranks last among equal tanimoto
    r = _finish([_cand(1, 1.0, None), _cand(2, 1.0, 1.9)])
    assert r.best.ligand_b == ("LIG", "A", 2)


def test_status_needs_accepted_site_and_rmsd_cutoff():
    assert _finish([_cand(1, 1.0, 0.5, accepted=False)]).status is PairStatus.NOT_SIMILAR
    assert _finish([_cand(1, 1.0, 2.5)]).status is PairStatus.NOT_SIMILAR
    assert _finish([_cand(1, 1.0, 2.5)], PipelineParams(ligand_rmsd_cutoff=3.0)).status is PairStatus.SIMILAR
    r = _finish([_cand(1, 0.0, None)])
    assert r.status is PairStatus.NO_SHARED_CHEMISTRY and r.best is None


def test_failed_candidate_marks_pair_error():
    pipe = BssPipeline(store=None)
    state = pipeline._PairState(PairTask(0, "1aaa", "1bbb"), 0.0)
    r = pipe.finish(state, [TaskOutcome(0, 0, value=_cand(1, 1.0, 0.1)), TaskOutcome(1, 1, error="KeyError: x")])
    assert r.status is PairStatus.ERROR and "KeyError" in r.message


def test_missing_structure_is_error(corpus_store):
    run = run_corpus(["9s01", "9zzz"], FarmConfig(), corpus_store)
    (r,) = run.results
    assert r.status is PairStatus.ERROR and "fetch failed: 9zzz" in r.message
    assert not run.ok


def test_fixture_corpus_results(fixture_run):
    assert len(fixture_run.results) == 15
    assert [r.index for r in fixture_run.results] == list(range(15))
    assert fixture_run.ok
    statuses = {(r.id_a, r.id_b): r.status.value for r in fixture_run.results}
    # pockets built from a shared motif are the similar ones
    assert {k for k, v in statuses.items() if v == "Similar"} == {
        ("9s01", "9s02"), ("9s01", "9s03"), ("9s01", "9s05"), ("9s01", "9s06"), ("9s03", "9s05"), ("9s04", "9s06")}


def test_record_invariants(fixture_run):
    for r in fixture_run.results:
        rec = r.record()
        if r.status is PairStatus.SIMILAR:
            assert rec["site_alignment"]["accepted"] and rec["ligand_rmsd"] <= 2.0
        assert (rec["best_ligand_pair"] is not None) == (r.status in (PairStatus.SIMILAR, PairStatus.NOT_SIMILAR))
        t = r.timing
        assert t.remaining_seconds >= 0 and min(t.find_iso_seconds, t.find_mcs_seconds, t.total_seconds) >= 0
        assert t.find_iso_seconds + t.find_mcs_seconds <= t.total_seconds


def test_winner_dominance(fixture_run):
    for r in fixture_run.results:
        if r.best is None:
            continue
        best_rmsd = r.best.ligand_rmsd if r.best.ligand_rmsd is not None else float("inf")
        for c in r.candidates:
            assert not c.tanimoto > r.best.tanimoto
            if c.tanimoto == r.best.tanimoto and c.ligand_rmsd is not None:
                assert not c.ligand_rmsd < best_rmsd


def test_accounting_with_counting_wrappers(corpus_store, monkeypatch):
    lock = threading.Lock()
    calls = {"iso": 0, "iso_empty": 0, "mcs": 0}
    real_iso, real_mcs = pipeline.find_isomorphisms, pipeline.find_mcs

    def counting_iso(a, b, **kw):
        out = real_iso(a, b, **kw)
        with lock:
            calls["iso"] += 1
            calls["iso_empty"] += not out
        return out

    def counting_mcs(a, b, **kw):
        with lock:
            calls["mcs"] += 1
        return real_mcs(a, b, **kw)

    monkeypatch.setattr(pipeline, "find_isomorphisms", counting_iso)
    monkeypatch.setattr(pipeline, "find_mcs", counting_mcs)
    run = run_corpus(CORPUS_IDS, FarmConfig(workers=3, level=2, strategy="scatter"), corpus_store)
    iso = sum(r.timing.find_iso_calls for r in run.results)
    mcs = sum(r.timing.find_mcs_calls for r in run.results)
    evaluated = sum(len(r.candidates) for r in run.results)
    assert iso + mcs == evaluated == calls["iso"]
    assert mcs == calls["mcs"] == calls["iso_empty"]
    assert mcs > 0 and iso > 0


def test_results_independent_of_schedule(corpus_store, fixture_run):
    baseline = [comparable(rec) for rec in fixture_run.records()]
    for level in (1, 2):
        for strategy in ("broadcast", "scatter"):
            run = run_corpus(CORPUS_IDS, FarmConfig(workers=2, level=level, strategy=strategy), corpus_store)
            assert [comparable(rec) for rec in run.records()] == baseline


def test_manifest_and_record_metadata(corpus_store):
    params = PipelineParams(ligand_rmsd_cutoff=1.5)
    run = run_corpus(["9s01", "9s02"], FarmConfig(workers=2, strategy="scatter", level=2), corpus_store, params)
    m = run.manifest
    assert m["run"] == {"strategy": "scatter", "level": 2, "workers": 2, "backend": m["run"]["backend"]}
    assert m["params"]["ligand_rmsd_cutoff"] == 1.5 and m["params"]["eps"] == 1.0
    assert m["corpus"] == ["9s01", "9s02"] and m["n_pairs"] == 1 and m["offline"] is True
    (rec,) = run.records()
    assert rec["run"]["workers"] == 2 and rec["params"]["min_patch"] == 10
    json.dumps(rec)


def test_run_corpus_needs_two_ids(corpus_store):
    with pytest.raises(ValueError):
        run_corpus(["9s01"], FarmConfig(), corpus_store)


def test_conect_ligand_matches_distance_perception(corpus_store):
    # 9s03's NPL carries CONECT records; its graph equals 9s01's distance-perceived NPL
    _, l1 = corpus_store.get("9s01")
    _, l3 = corpus_store.get("9s03")
    npl1 = next(g for g in l1 if g.ligand_key[0] == "NPL")
    npl3 = next(g for g in l3 if g.ligand_key[0] == "NPL")
    assert len(npl1.edges) == len(npl3.edges) == 12
    s3 = parse_pdb((corpus_store.cache_dir / "9s03.pdb").read_text())
    assert s3.conect
