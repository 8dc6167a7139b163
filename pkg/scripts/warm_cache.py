"""Compute the benchmark samples into the shared cache.

    python3 scripts/warm_cache.py                 # everything, in the order below
    python3 scripts/warm_cache.py la_probe decay  # selected parts

The cache lives at $OSC_CACHE_DIR/samples.jsonl (default: .osc_cache/ in the repo root).
"""
import argparse
import os
import sys
import time
from pathlib import Path

from dtype_osc import benchmarks as B
from dtype_osc import randol as R
from dtype_osc.cache import SampleCache
from dtype_osc.phase import DPhase

ROOT = Path(__file__).resolve().parents[1]
ORDER = ["decay", "la_growth", "la_probe", "la_probe_coarse", "nla_probe", "exceptional"]


def cache() -> SampleCache:
    return SampleCache(Path(os.environ.get("OSC_CACHE_DIR", ROOT / ".osc_cache")) / "samples.jsonl")


def warm_field(name, store, workers):
    b = B.FIELDS[name]
    t0 = time.time()

    def progress(k, total):
        print(f"  {name}: {k}/{total} cells, {time.time() - t0:.0f} s", flush=True)

    fld = b.run(store, workers, progress)
    am = fld.annulus_max()
    print(f"{name}: {time.time() - t0:.0f} s, flagged {fld.flagged_count()}, annulus max "
          + ", ".join(f"{j}:{v:.3f}" for j, v in sorted(am.items())), flush=True)


def warm_decay(store):
    t0 = time.time()
    for n in (3, 4):
        fit = R.decay_fit(DPhase.model(n, 1), (0.0, 0.0), B.DECAY_LAMBDAS, amplitude=B.DECAY_AMPLITUDE,
                          cache=store)
        print(f"decay n={n}: slope {fit.slope:.4f} (expected {-(n + 1) / (2 * n):.4f}), {time.time() - t0:.0f} s",
              flush=True)


def warm_exceptional(store):
    t0 = time.time()
    rep = R.exceptional_blowup_scan(cache=store, **B.EXCEPTIONAL)
    print(f"exceptional m=2: across {rep.across_exponent:.4f} (sides {rep.across_by_side[0]:.4f}, "
          f"{rep.across_by_side[1]:.4f}), along {rep.along_exponent:.4f}, {time.time() - t0:.0f} s", flush=True)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("parts", nargs="*", default=ORDER, choices=ORDER)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args(argv)
    store = cache()
    print(f"cache {store.path} ({len(store)} records)", flush=True)
    for part in args.parts:
        if part == "decay":
            warm_decay(store)
        elif part == "exceptional":
            warm_exceptional(store)
        else:
            warm_field(part, store, args.workers)
    return 0


if __name__ == "__main__":
    sys.exit(main())
