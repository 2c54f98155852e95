"""Benchmark statistics and timing-breakdown reports."""
from __future__ import annotations

import csv
import math
import statistics
import time
from dataclasses import dataclass

from .pipeline import CorpusRun, PipelineParams, run_corpus
from .taskfarm import FarmConfig

Z_95 = 1.96


@dataclass(frozen=True)
class BenchStats:
    samples: tuple
    mean: float
    ci_half_width: float

    @classmethod
    def from_samples(cls, samples):
        mean, half = mean_ci(samples)
        return cls(tuple(float(s) for s in samples), mean, half)


def mean_ci(samples) -> tuple[float, float]:
    """Mean and 95% normal-approximation half-width, 1.96 * s / sqrt(n).

    ``s`` is the sample standard deviation (n - 1 denominator).
    """
    xs = [float(s) for s in samples]
    if len(xs) < 2:
        raise ValueError("need >= 2 samples")
    mean = math.fsum(xs) / len(xs)
    sd = statistics.stdev(xs)
    return mean, Z_95 * sd / math.sqrt(len(xs))


def speedup_report(stats_a: BenchStats, stats_b: BenchStats) -> float:
    """Percent reduction of mean time going from ``a`` (baseline) to ``b``."""
    if not stats_a.mean > 0:
        raise ValueError("baseline mean must be positive")
    return 100.0 * (stats_a.mean - stats_b.mean) / stats_a.mean


def read_samples(path) -> list[float]:
    """Durations from a CSV: a ``seconds``/``time`` column if there is a header, else the last column."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise ValueError(f"no samples in {path}")
    col = -1
    try:
        float(rows[0][-1])
    except ValueError:
        header = [h.strip().lower() for h in rows[0]]
        for name in ("seconds", "time", "duration"):
            if name in header:
                col = header.index(name)
                break
        rows = rows[1:]
    return [float(r[col]) for r in rows]


def format_table(stats: BenchStats, title: str = "") -> str:
    lines = []
    if title:
        lines.append(title)
    lines.append(f"{'EXECUTIONS':<12}{'TIME(seconds)':>16}")
    for k, s in enumerate(stats.samples, start=1):
        lines.append(f"{k:<12}{s:>16.6f}")
    lines.append(f"{'Average time':<12} {stats.mean:.7f} ±{stats.ci_half_width:.2f} at 95% CI")
    return "\n".join(lines)


@dataclass
class BenchResult:
    stats: BenchStats
    runs: list


def bench(ids, config: FarmConfig, store, repetitions: int = 5,
          params: PipelineParams = PipelineParams()) -> BenchResult:
    """Run the whole corpus ``repetitions`` times and summarize wall times."""
    if repetitions < 2:
        raise ValueError("need >= 2 repetitions")
    runs = []
    for rep in range(repetitions):
        run = run_corpus(ids, config, store, params)
        if not run.ok:
            bad = [r for r in run.results if r.status.value == "Error"]
            raise RuntimeError(f"bench run {rep + 1} failed: {bad[0].id_a}-{bad[0].id_b}: {bad[0].message}")
        runs.append(run)
    return BenchResult(BenchStats.from_samples([r.wall_seconds for r in runs]), runs)


def warm_up(ids, store, params: PipelineParams = PipelineParams()) -> float:
    """One sequential pass so JIT compilation and parsing stay out of timed runs."""
    t0 = time.perf_counter()
    run_corpus(ids, FarmConfig(workers=1), store, params)
    return time.perf_counter() - t0


# --- breakdown ---------------------------------------------------------------

def _shares(timing: dict) -> dict:
    total = timing.get("total_seconds", 0.0) or 0.0
    iso = timing.get("find_iso_seconds", 0.0)
    mcs = timing.get("find_mcs_seconds", 0.0)
    remaining = max(total - iso - mcs, 0.0)
    if total <= 0:
        return {"iso_pct": 0.0, "mcs_pct": 0.0, "remaining_pct": 100.0, "remaining_seconds": 0.0}
    return {
        "iso_pct": 100.0 * iso / total,
        "mcs_pct": 100.0 * mcs / total,
        "remaining_pct": 100.0 * remaining / total,
        "remaining_seconds": remaining,
    }


def breakdown_report(records) -> dict:
    """Per-pair and aggregate call counts and time shares of the two match routines.

    ``records`` are result dicts (as written to the JSONL output) or
    ``PairResult`` objects.
    """
    rows = []
    for rec in records:
        if not isinstance(rec, dict):
            rec = rec.record()
        timing = rec.get("timing") or {}
        row = {
            "pair": f"{rec['id_a']}-{rec['id_b']}",
            "status": rec["status"],
            "find_iso_calls": int(timing.get("find_iso_calls", 0)),
            "find_mcs_calls": int(timing.get("find_mcs_calls", 0)),
            "find_iso_seconds": float(timing.get("find_iso_seconds", 0.0)),
            "find_mcs_seconds": float(timing.get("find_mcs_seconds", 0.0)),
            "total_seconds": float(timing.get("total_seconds", 0.0)),
        }
        row.update(_shares(row))
        rows.append(row)
    agg = {
        "pair": "ALL",
        "status": "",
        "find_iso_calls": sum(r["find_iso_calls"] for r in rows),
        "find_mcs_calls": sum(r["find_mcs_calls"] for r in rows),
        "find_iso_seconds": math.fsum(r["find_iso_seconds"] for r in rows),
        "find_mcs_seconds": math.fsum(r["find_mcs_seconds"] for r in rows),
        "total_seconds": math.fsum(r["total_seconds"] for r in rows),
    }
    agg.update(_shares(agg))
    return {"pairs": rows, "aggregate": agg}


def format_breakdown(report: dict) -> str:
    head = (f"{'pair':<12}{'status':<19}{'iso':>5}{'mcs':>5}{'iso%':>8}{'mcs%':>8}"
            f"{'rest%':>8}{'total_s':>11}")
    lines = [head]
    for r in report["pairs"] + [report["aggregate"]]:
        lines.append(f"{r['pair']:<12}{r['status']:<19}{r['find_iso_calls']:>5}{r['find_mcs_calls']:>5}"
                     f"{r['iso_pct']:>8.2f}{r['mcs_pct']:>8.2f}{r['remaining_pct']:>8.2f}"
                     f"{r['total_seconds']:>11.4f}")
    agg = report["aggregate"]
    lines.append(f"total ligand comparisons: {agg['find_iso_calls'] + agg['find_mcs_calls']} "
                 f"({agg['find_iso_calls']} isomorphism, {agg['find_mcs_calls']} MCS)")
    return "\n".join(lines)


def write_summary_csv(path, run: CorpusRun):
    fields = ["pair_index", "id_a", "id_b", "status", "ligand_a", "ligand_b", "match_kind", "tanimoto",
              "ligand_rmsd", "site_size", "patch_rmsd", "surface_vector_angle", "site_accepted",
              "find_iso_calls", "find_mcs_calls", "total_seconds"]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        for rec in run.records():
            site = rec["site_alignment"] or {}
            pair = rec["best_ligand_pair"] or [None, None]
            w.writerow({
                "pair_index": rec["pair_index"], "id_a": rec["id_a"], "id_b": rec["id_b"],
                "status": rec["status"], "ligand_a": pair[0], "ligand_b": pair[1],
                "match_kind": rec["match_kind"], "tanimoto": rec["tanimoto"], "ligand_rmsd": rec["ligand_rmsd"],
                "site_size": site.get("size"), "patch_rmsd": site.get("patch_rmsd"),
                "surface_vector_angle": site.get("surface_vector_angle"),
                "site_accepted": site.get("accepted"),
                "find_iso_calls": rec["timing"]["find_iso_calls"],
                "find_mcs_calls": rec["timing"]["find_mcs_calls"],
                "total_seconds": rec["timing"]["total_seconds"],
            })
