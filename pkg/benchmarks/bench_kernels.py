"""Compare the numba and pure-python kernel backends.

    python3 benchmarks/bench_kernels.py [--reps 5] [--end-to-end]

Kernel timings call both backends in one process. ``--end-to-end`` also runs
the bundled fixture corpus in two subprocesses, one with BSS_DISABLE_NUMBA=1.
"""
import argparse
import os
import statistics
import subprocess
import sys
import time

import numpy as np

from bss.graphmatch import find_isomorphisms, max_clique, modular_product
from bss.ingest import StructureStore
from bss.synthetic import CORPUS_IDS, bundled_corpus_dir


def timed(fn, reps):
    fn()  # compile / warm caches
    out = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t0)
    return statistics.median(out)


def random_adj(rng, n, p):
    upper = np.triu(rng.random((n, n)) < p, 1)
    return (upper | upper.T).astype(np.uint8)


def workloads():
    rng = np.random.default_rng(0)
    store = StructureStore(bundled_corpus_dir(), offline=True)
    ligs = {pid: store.get(pid)[1] for pid in CORPUS_IDS}
    npl = next(g for g in ligs["9s01"] if g.ligand_key[0] == "NPL")
    bza = next(g for g in ligs["9s01"] if g.ligand_key[0] == "BZA")
    other = next(g for g in ligs["9s03"] if g.ligand_key[0] != "NPL")
    g1, g2 = random_adj(rng, 60, 0.5), random_adj(rng, 120, 0.3)
    yield "clique G(60, 0.5)", lambda b: max_clique(g1, backend=b)
    yield "clique G(120, 0.3)", lambda b: max_clique(g2, backend=b)
    product = modular_product(bza, other)
    yield f"clique ligand product ({len(product)} v)", lambda b: max_clique(product, backend=b)
    yield "isomorphisms NPL/NPL", lambda b: find_isomorphisms(npl, npl, backend=b)


def end_to_end(reps):
    code = ("import time;from bss.pipeline import run_corpus;from bss.taskfarm import FarmConfig;"
            "from bss.ingest import StructureStore;from bss.synthetic import CORPUS_IDS,bundled_corpus_dir;"
            "s=StructureStore(bundled_corpus_dir(),offline=True);run_corpus(CORPUS_IDS,FarmConfig(),s);"
            f"print(min(run_corpus(CORPUS_IDS,FarmConfig(),s).wall_seconds for _ in range({reps})))")
    rows = []
    for label, flag in (("numba", "0"), ("python", "1")):
        env = dict(os.environ, BSS_DISABLE_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        rows.append((label, float(out.stdout.strip())))
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=5)
    ap.add_argument("--end-to-end", action="store_true")
    args = ap.parse_args(argv)

    print(f"{'workload':<34}{'numba s':>11}{'python s':>11}{'speedup':>9}")
    for name, fn in workloads():
        fast = timed(lambda: fn("numba"), args.reps)
        slow = timed(lambda: fn("python"), args.reps)
        if fn("numba") != fn("python"):
            raise SystemExit(f"backends disagree on {name}")
        print(f"{name:<34}{fast:>11.5f}{slow:>11.5f}{slow / fast:>8.1f}x")
    if args.end_to_end:
        rows = dict(end_to_end(args.reps))
        print(f"{'fixture corpus, 1 worker':<34}{rows['numba']:>11.5f}{rows['python']:>11.5f}"
              f"{rows['python'] / rows['numba']:>8.1f}x")


if __name__ == "__main__":
    main()
