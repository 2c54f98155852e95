"""Per-pair binding-site similarity pipeline and corpus runs."""
from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import asdict, dataclass, field
from enum import Enum

from . import __version__, geometry
from ._accel import backend_name
from .errors import BssError, EmptySiteError
from .graphmatch import MatchKind, find_isomorphisms, find_mcs
from .ingest import DEFAULT_EXCLUDED, DEFAULT_MIN_HEAVY_ATOMS, PairTask, StructureStore, unique_pairs
from .sites import SiteParams, align_sites, extract_binding_site
from .taskfarm import FarmConfig, run_level

logger = logging.getLogger(__name__)

RECORD_VERSION = 1


class PairStatus(str, Enum):
    SIMILAR = "Similar"
    NOT_SIMILAR = "NotSimilar"
    NO_SHARED_CHEMISTRY = "NoSharedChemistry"
    ERROR = "Error"


@dataclass(frozen=True)
class PipelineParams:
    site: SiteParams = SiteParams()
    ligand_rmsd_cutoff: float = 2.0
    exclude: tuple = DEFAULT_EXCLUDED
    min_heavy_atoms: int = DEFAULT_MIN_HEAVY_ATOMS

    def as_dict(self):
        d = self.site.as_dict()
        d.update(ligand_rmsd_cutoff=self.ligand_rmsd_cutoff, exclude=list(self.exclude),
                 min_heavy_atoms=self.min_heavy_atoms)
        return d


@dataclass
class TimingBreakdown:
    find_iso_calls: int = 0
    find_iso_seconds: float = 0.0
    find_mcs_calls: int = 0
    find_mcs_seconds: float = 0.0
    total_seconds: float = 0.0

    @property
    def remaining_seconds(self) -> float:
        return max(self.total_seconds - self.find_iso_seconds - self.find_mcs_seconds, 0.0)

    def as_dict(self):
        d = asdict(self)
        d["remaining_seconds"] = self.remaining_seconds
        return d


@dataclass(frozen=True)
class CandidateTask:
    pair_index: int
    id_a: str
    id_b: str
    ligand_a: tuple
    ligand_b: tuple


@dataclass
class CandidateResult:
    ligand_a: tuple
    ligand_b: tuple
    kind: str
    mcs_size: int
    tanimoto: float
    n_mappings: int
    site: dict | None
    ligand_rmsd: float | None = None
    observed_rmsd: float | None = None
    optimal_rmsd: float | None = None
    iso_seconds: float = 0.0
    mcs_seconds: float = 0.0
    elapsed_seconds: float = 0.0

    @property
    def used_mcs(self) -> bool:
        return self.kind != MatchKind.ISOMORPHIC.value

    @property
    def site_accepted(self) -> bool:
        return bool(self.site and self.site["accepted"])

    def rank_key(self):
        # max tanimoto, then min ligand RMSD, then ligand keys
        rmsd = self.ligand_rmsd if self.ligand_rmsd is not None else float("inf")
        return (-self.tanimoto, rmsd, _key_str(self.ligand_a), _key_str(self.ligand_b))

    def record(self):
        return {
            "ligand_a": _key_str(self.ligand_a),
            "ligand_b": _key_str(self.ligand_b),
            "match_kind": self.kind,
            "mcs_size": self.mcs_size,
            "tanimoto": self.tanimoto,
            "n_mappings": self.n_mappings,
            "site_alignment": self.site,
            "ligand_rmsd": self.ligand_rmsd,
            "observed_rmsd": self.observed_rmsd,
            "optimal_rmsd": self.optimal_rmsd,
        }


@dataclass
class PairResult:
    index: int
    id_a: str
    id_b: str
    status: PairStatus
    message: str = ""
    best: CandidateResult | None = None
    candidates: list = field(default_factory=list)
    timing: TimingBreakdown = field(default_factory=TimingBreakdown)

    @property
    def best_ligand_pair(self):
        if self.best is None:
            return None
        return (self.best.ligand_a, self.best.ligand_b)

    @property
    def tanimoto(self):
        return None if self.best is None else self.best.tanimoto

    @property
    def ligand_rmsd(self):
        return None if self.best is None else self.best.ligand_rmsd

    def record(self, params: PipelineParams | None = None, run: dict | None = None,
               timings: bool = True) -> dict:
        best = self.best
        rec = {
            "version": RECORD_VERSION,
            "pair_index": self.index,
            "id_a": self.id_a,
            "id_b": self.id_b,
            "status": self.status.value,
            "message": self.message,
            "best_ligand_pair": None if best is None else [_key_str(best.ligand_a), _key_str(best.ligand_b)],
            "match_kind": None if best is None else best.kind,
            "tanimoto": None if best is None else best.tanimoto,
            "mcs_size": None if best is None else best.mcs_size,
            "ligand_rmsd": None if best is None else best.ligand_rmsd,
            "site_alignment": None if best is None else best.site,
            "candidates": [c.record() for c in self.candidates],
        }
        if params is not None:
            rec["params"] = params.as_dict()
        if timings:
            rec["timing"] = self.timing.as_dict()
        if run is not None:
            rec["run"] = run
        return rec


def _key_str(key) -> str:
    res, chain, seq = key
    return f"{res}:{chain}:{seq}"


def comparable(record: dict) -> str:
    """Canonical JSON of a result record without timing and run metadata."""
    return json.dumps({k: v for k, v in record.items() if k not in ("timing", "run")}, sort_keys=True)


@dataclass
class _PairState:
    pair: PairTask
    started: float
    prep_seconds: float = 0.0
    status: PairStatus | None = None
    message: str = ""


class BssPipeline:
    """The per-pair pipeline, split into stages the task farm can schedule.

    ``prepare`` loads both structures and enumerates candidate ligand pairs,
    ``evaluate`` compares one candidate, ``finish`` picks the winner.
    """

    def __init__(self, store: StructureStore, params: PipelineParams = PipelineParams(), backend=None):
        self.store = store
        self.params = params
        self.backend = backend

    # stages -------------------------------------------------------------

    def prepare(self, pair: PairTask):
        t0 = time.perf_counter()
        state = _PairState(pair, t0)
        try:
            _, lig_a = self.store.get(pair.id_a)
            _, lig_b = self.store.get(pair.id_b)
        except (BssError, ValueError, OSError) as exc:
            state.status, state.message = PairStatus.ERROR, str(exc)
            state.prep_seconds = time.perf_counter() - t0
            return state, []
        if not lig_a or not lig_b:
            state.status, state.message = PairStatus.NO_SHARED_CHEMISTRY, "no shared ligand chemistry"
            state.prep_seconds = time.perf_counter() - t0
            return state, []
        cross = [(ga, gb) for ga in lig_a for gb in lig_b]
        same = [(ga, gb) for ga, gb in cross if ga.formula == gb.formula]
        items = [CandidateTask(pair.index, pair.id_a, pair.id_b, ga.ligand_key, gb.ligand_key)
                 for ga, gb in (same or cross)]
        state.prep_seconds = time.perf_counter() - t0
        return state, items

    def evaluate(self, task: CandidateTask) -> CandidateResult:
        t0 = time.perf_counter()
        struct_a, ligs_a = self.store.get(task.id_a)
        struct_b, ligs_b = self.store.get(task.id_b)
        ga = next(g for g in ligs_a if g.ligand_key == task.ligand_a)
        gb = next(g for g in ligs_b if g.ligand_key == task.ligand_b)
        sp = self.params.site

        alignment = None
        site_info = None
        try:
            site_a = extract_binding_site(struct_a, ga, sp.site_cutoff)
            site_b = extract_binding_site(struct_b, gb, sp.site_cutoff)
        except EmptySiteError as exc:
            site_info = {"size": 0, "patch_rmsd": None, "surface_vector_angle": None,
                         "accepted": False, "note": str(exc)}
        else:
            alignment = align_sites(site_a, site_b, sp)
            site_info = alignment.summary()

        t = time.perf_counter()
        isos = find_isomorphisms(ga, gb, backend=self.backend)
        iso_seconds = time.perf_counter() - t
        mcs_seconds = 0.0
        if isos:
            kind, mappings, size, tani = MatchKind.ISOMORPHIC.value, isos, len(ga), 1.0
        else:
            t = time.perf_counter()
            outcome = find_mcs(ga, gb, backend=self.backend)
            mcs_seconds = time.perf_counter() - t
            kind, mappings, size, tani = outcome.kind.value, outcome.mappings, outcome.mcs_size, outcome.tanimoto

        result = CandidateResult(task.ligand_a, task.ligand_b, kind, size, tani, len(mappings), site_info,
                                 iso_seconds=iso_seconds, mcs_seconds=mcs_seconds)
        if alignment is not None and alignment.superposition is not None:
            best = None
            for mapping in mappings:
                if len(mapping) < 3:
                    continue
                score = geometry.ligand_rmsd(ga.coords, gb.coords, alignment.superposition, mapping)
                if best is None or score.observed_rmsd < best.observed_rmsd:
                    best = score
            if best is not None:
                result.observed_rmsd = best.observed_rmsd
                result.optimal_rmsd = best.optimal_rmsd
                result.ligand_rmsd = best.ligand_rmsd
        result.elapsed_seconds = time.perf_counter() - t0
        return result

    def finish(self, state: _PairState, outcomes) -> PairResult:
        t0 = time.perf_counter()
        pair = state.pair
        result = PairResult(pair.index, pair.id_a, pair.id_b, state.status or PairStatus.NOT_SIMILAR,
                            state.message)
        timing = result.timing
        failed = [o for o in outcomes if not o.ok]
        cands = [o.value for o in outcomes if o.ok]
        for c in cands:
            if c.used_mcs:
                timing.find_mcs_calls += 1
            else:
                timing.find_iso_calls += 1
            timing.find_iso_seconds += c.iso_seconds
            timing.find_mcs_seconds += c.mcs_seconds
        work = state.prep_seconds + sum(c.elapsed_seconds for c in cands)

        if failed:
            result.status = PairStatus.ERROR
            result.message = "; ".join(o.error for o in failed)
        elif state.status is None:
            result.candidates = sorted(cands, key=lambda c: (_key_str(c.ligand_a), _key_str(c.ligand_b)))
            winner = min(cands, key=CandidateResult.rank_key)
            if winner.tanimoto == 0:
                result.status = PairStatus.NO_SHARED_CHEMISTRY
                result.message = "no shared ligand chemistry"
            else:
                result.best = winner
                similar = (winner.site_accepted and winner.ligand_rmsd is not None
                           and winner.ligand_rmsd <= self.params.ligand_rmsd_cutoff)
                result.status = PairStatus.SIMILAR if similar else PairStatus.NOT_SIMILAR
        timing.total_seconds = work + (time.perf_counter() - t0)
        return result

    def failed(self, pair: PairTask, error: str) -> PairResult:
        return PairResult(pair.index, pair.id_a, pair.id_b, PairStatus.ERROR, error)

    # convenience ----------------------------------------------------------

    def run_pair(self, pair: PairTask) -> PairResult:
        from .taskfarm import _run_one

        state, items = self.prepare(pair)
        outcomes = [_run_one(i, item, 0, self.evaluate) for i, item in enumerate(items)]
        return self.finish(state, outcomes)


def run_pair(pair: PairTask, store: StructureStore, params: PipelineParams = PipelineParams()) -> PairResult:
    return BssPipeline(store, params).run_pair(pair)


@dataclass
class CorpusRun:
    results: list
    manifest: dict
    wall_seconds: float
    params: PipelineParams = PipelineParams()

    def records(self, timings: bool = True) -> list[dict]:
        return [r.record(self.params, self.manifest["run"], timings) for r in self.results]

    @property
    def ok(self) -> bool:
        return all(r.status is not PairStatus.ERROR for r in self.results)


def run_corpus(ids, config: FarmConfig, store: StructureStore,
               params: PipelineParams = PipelineParams()) -> CorpusRun:
    ids = list(ids)
    pairs = unique_pairs(ids)
    if len({p for t in pairs for p in (t.id_a, t.id_b)}) < 2:
        raise ValueError("need at least 2 distinct ids")
    pipeline = BssPipeline(store, params)
    level_run = run_level(pairs, config, pipeline)
    run_meta = {
        "strategy": config.strategy.value,
        "level": config.level,
        "workers": config.workers,
        "backend": backend_name(),
    }
    manifest = {
        "version": __version__,
        "record_version": RECORD_VERSION,
        "run": run_meta,
        "params": params.as_dict(),
        "corpus": sorted({t.id_a for t in pairs} | {t.id_b for t in pairs}),
        "n_pairs": len(pairs),
        "wall_seconds": level_run.wall_seconds,
        "cpu_count": os.cpu_count(),
        "cache_dir": str(store.cache_dir),
        "offline": store.offline,
    }
    return CorpusRun(level_run.results, manifest, level_run.wall_seconds, params)
