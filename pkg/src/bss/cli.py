"""Command-line entry point: ``bss {fetch,pairs,run,bench,report,product,corpus}``."""
from __future__ import annotations

import argparse
import json
import logging
import shutil
import sys
from pathlib import Path

from . import __version__
from .bench import (BenchStats, bench, breakdown_report, format_breakdown, format_table, read_samples,
                    speedup_report, warm_up, write_summary_csv)
from .errors import BssError
from .graphmatch import modular_product
from .ingest import (DEFAULT_EXCLUDED, DEFAULT_MIN_HEAVY_ATOMS, StructureStore, fetch_structure, normalize_id,
                     unique_pairs)
from .pipeline import PipelineParams, run_corpus
from .sites import SiteParams, build_site_product_graph, extract_binding_site
from .synthetic import bundled_corpus_dir
from .taskfarm import FarmConfig, Strategy

EXIT_OK, EXIT_PAIR_ERROR, EXIT_USAGE = 0, 1, 2

logger = logging.getLogger("bss")


class UsageError(Exception):
    pass


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _add_store_args(p):
    p.add_argument("--cache-dir", type=Path, default=None,
                   help="structure cache (default: $BSS_CACHE_DIR or ~/.cache/bss)")
    p.add_argument("--offline", action="store_true", help="never touch the network")
    p.add_argument("--url-template", default=None, help="download URL with {ID}/{id} placeholders")
    p.add_argument("--bundled", action="store_true",
                   help="use the bundled synthetic corpus as an offline cache")


def _add_run_args(p, ids_nargs="+"):
    p.add_argument("ids", nargs=ids_nargs, help="pdb ids")
    p.add_argument("--level", type=int, choices=(1, 2), default=1)
    p.add_argument("--strategy", choices=[s.value for s in Strategy], default="broadcast")
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--barrier-timeout", type=float, default=None)
    _add_store_args(p)
    d = SiteParams()
    g = p.add_argument_group("thresholds")
    g.add_argument("--site-cutoff", type=float, default=d.site_cutoff)
    g.add_argument("--eps", type=float, default=d.eps)
    g.add_argument("--dmax", type=float, default=d.dmax)
    g.add_argument("--min-patch", type=int, default=d.min_patch)
    g.add_argument("--patch-rmsd-cutoff", type=float, default=d.patch_rmsd_cutoff)
    g.add_argument("--angle-cutoff", type=float, default=d.angle_cutoff)
    g.add_argument("--residue-matching", choices=("class", "exact"), default=d.residue_matching)
    g.add_argument("--ligand-rmsd-cutoff", type=float, default=2.0)
    g.add_argument("--exclude", default=",".join(DEFAULT_EXCLUDED),
                   help="comma-separated residue names never treated as ligands")
    g.add_argument("--min-heavy-atoms", type=int, default=DEFAULT_MIN_HEAVY_ATOMS)


def _params(args) -> PipelineParams:
    site = SiteParams(site_cutoff=args.site_cutoff, eps=args.eps, dmax=args.dmax, min_patch=args.min_patch,
                      patch_rmsd_cutoff=args.patch_rmsd_cutoff, angle_cutoff=args.angle_cutoff,
                      residue_matching=args.residue_matching)
    exclude = tuple(x.strip().upper() for x in args.exclude.split(",") if x.strip())
    return PipelineParams(site=site, ligand_rmsd_cutoff=args.ligand_rmsd_cutoff, exclude=exclude,
                          min_heavy_atoms=args.min_heavy_atoms)


def _store(args, params: PipelineParams | None = None) -> StructureStore:
    cache_dir, offline = args.cache_dir, args.offline
    if args.bundled:
        cache_dir, offline = bundled_corpus_dir(), True
    kw = {}
    if params is not None:
        kw = {"exclude": params.exclude, "min_heavy_atoms": params.min_heavy_atoms}
    return StructureStore(cache_dir, offline=offline, url_template=args.url_template, **kw)


def _config(args) -> FarmConfig:
    return FarmConfig(workers=args.workers, strategy=Strategy(args.strategy), level=args.level,
                      barrier_timeout=args.barrier_timeout)


def _ids(raw) -> list[str]:
    try:
        return [normalize_id(x) for x in raw]
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# --- subcommands -------------------------------------------------------------

def cmd_fetch(args) -> int:
    store = _store(args)
    status = EXIT_OK
    for pid in _ids(args.ids):
        try:
            path = fetch_structure(pid, store.cache_dir, offline=store.offline, url_template=store.url_template)
            print(path)
        except BssError as exc:
            print(f"error: {exc}", file=sys.stderr)
            status = EXIT_PAIR_ERROR
    return status


def cmd_pairs(args) -> int:
    try:
        tasks = unique_pairs(_ids(args.ids))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.list:
        for t in tasks:
            print(f"{t.index}\t{t.id_a}\t{t.id_b}")
    else:
        print(len(tasks))
    return EXIT_OK


def _write_jsonl(path, records):
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def _manifest_path(out: Path) -> Path:
    return out.with_name(out.stem + ".manifest.json")


def _print_results(run, stream=None):
    stream = stream or sys.stdout
    for r in run.results:
        best = r.best
        extra = r.message
        if best is not None:
            site = best.site or {}
            rmsd = "-" if best.ligand_rmsd is None else f"{best.ligand_rmsd:.3f}"
            extra = (f"{best.kind} tanimoto={best.tanimoto:.3f} ligand_rmsd={rmsd} "
                     f"site={site.get('size')} accepted={site.get('accepted')}")
        print(f"{r.index:>3} {r.id_a} {r.id_b} {r.status.value:<18} {extra}", file=stream)


def cmd_run(args) -> int:
    ids = _ids(args.ids)
    if len(set(ids)) < 2:
        raise UsageError("need at least 2 distinct ids")
    params = _params(args)
    run = run_corpus(ids, _config(args), _store(args, params), params)
    if args.out:
        out = Path(args.out)
        _write_jsonl(out, run.records())
        _manifest_path(out).write_text(json.dumps(run.manifest, indent=2, sort_keys=True) + "\n")
    if args.summary:
        write_summary_csv(args.summary, run)
    _print_results(run)
    print(f"wall {run.wall_seconds:.3f}s  pairs {len(run.results)}  "
          f"level {args.level}  strategy {args.strategy}  workers {args.workers}", file=sys.stderr)
    return EXIT_OK if run.ok else EXIT_PAIR_ERROR


def cmd_bench(args) -> int:
    if args.inject:
        tables = []
        for path in args.inject:
            stats = BenchStats.from_samples(read_samples(path))
            tables.append(stats)
            print(format_table(stats, title=str(path)))
            print()
        for prev, cur in zip(tables, tables[1:]):
            print(f"speedup {speedup_report(prev, cur):.4f}%")
        return EXIT_OK
    if not args.ids:
        raise UsageError("ids required unless --inject is given")
    ids = _ids(args.ids)
    params = _params(args)
    store = _store(args, params)
    if not args.no_warmup:
        warm_up(ids, store, params)
    try:
        result = bench(ids, _config(args), store, args.reps, params)
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PAIR_ERROR
    title = f"level {args.level}, {args.strategy}, {args.workers} worker(s)"
    print(format_table(result.stats, title=title))
    if args.out:
        out = Path(args.out)
        with open(out, "w") as fh:
            fh.write("execution,seconds\n")
            fh.writelines(f"{k},{s!r}\n" for k, s in enumerate(result.stats.samples, start=1))
        manifest = dict(result.runs[-1].manifest, repetitions=args.reps,
                        mean=result.stats.mean, ci_half_width=result.stats.ci_half_width)
        _manifest_path(out).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_report(args) -> int:
    records = []
    with open(args.breakdown) as fh:
        for line in fh:
            if line.strip():
                records.append(json.loads(line))
    report = breakdown_report(records)
    if args.json:
        print(json.dumps(report, indent=2))
    else:
        print(format_breakdown(report))
    return EXIT_OK


def _pick_ligand(ligands, key, pid):
    if not ligands:
        raise UsageError(f"{pid}: no ligands")
    if key is None:
        return ligands[0]
    for g in ligands:
        if g.key_str == key:
            return g
    raise UsageError(f"{pid}: no ligand {key} (have {', '.join(g.key_str for g in ligands)})")


def cmd_product(args) -> int:
    store = _store(args)
    sa, la = store.get(args.id_a)
    sb, lb = store.get(args.id_b)
    ga = _pick_ligand(la, args.ligand_a, args.id_a)
    gb = _pick_ligand(lb, args.ligand_b, args.id_b)
    if args.site:
        d = SiteParams()
        product = build_site_product_graph(extract_binding_site(sa, ga, d.site_cutoff),
                                           extract_binding_site(sb, gb, d.site_cutoff), d.eps, d.dmax)
    else:
        product = modular_product(ga, gb)
    sys.stdout.write(product.to_text())
    return EXIT_OK


def cmd_corpus(args) -> int:
    src = bundled_corpus_dir()
    files = sorted(src.glob("*.pdb"))
    if args.dest is None:
        for f in files:
            print(f)
        return EXIT_OK
    args.dest.mkdir(parents=True, exist_ok=True)
    for f in files:
        shutil.copy2(f, args.dest / f.name)
    print(f"copied {len(files)} files to {args.dest}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bss", description="Binding-site similarity pipeline.")
    parser.add_argument("--version", action="version", version=f"bss {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fetch", help="download structures into the cache")
    p.add_argument("ids", nargs="+")
    _add_store_args(p)
    p.set_defaults(func=cmd_fetch)

    p = sub.add_parser("pairs", help="count (or list) unique id pairs")
    p.add_argument("ids", nargs="+")
    p.add_argument("--list", action="store_true")
    p.set_defaults(func=cmd_pairs)

    p = sub.add_parser("run", help="run the pipeline over all unique pairs")
    _add_run_args(p)
    p.add_argument("--out", help="JSONL result records (manifest written alongside)")
    p.add_argument("--summary", help="CSV summary, one row per pair")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bench", help="repeat whole-corpus runs and summarize wall times")
    _add_run_args(p, ids_nargs="*")
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--inject", action="append", type=Path,
                   help="CSV of durations; statistics only (repeatable)")
    p.add_argument("--no-warmup", action="store_true")
    p.add_argument("--out", help="CSV of per-run wall times")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("report", help="per-pair timing and call breakdown")
    p.add_argument("--breakdown", required=True, type=Path, help="JSONL from `bss run --out`")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("product", help="dump a modular product graph (debugging)")
    p.add_argument("id_a")
    p.add_argument("id_b")
    p.add_argument("--ligand-a", help="RES:CHAIN:SEQ (default: first ligand)")
    p.add_argument("--ligand-b")
    p.add_argument("--site", action="store_true", help="dump the binding-site product graph instead")
    _add_store_args(p)
    p.set_defaults(func=cmd_product)

    p = sub.add_parser("corpus", help="list or copy the bundled synthetic corpus")
    p.add_argument("--dest", type=Path, default=None)
    p.set_defaults(func=cmd_corpus)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "reps", 2) < 2:
        parser.error("--reps must be >= 2")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"bss: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BssError as exc:
        print(f"bss: error: {exc}", file=sys.stderr)
        return EXIT_PAIR_ERROR


if __name__ == "__main__":
    sys.exit(main())
