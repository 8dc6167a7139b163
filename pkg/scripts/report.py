"""Summarise the cached benchmark fields: growth, p-hat, and the gamma sweep.

    python3 scripts/report.py                # all fields found in the cache
    python3 scripts/report.py la_probe --q-max 60

Missing samples are computed (and cached), so run scripts/warm_cache.py first for speed.
"""
import argparse
import sys

import numpy as np

from dtype_osc import benchmarks as B
from dtype_osc import randol as R
from warm_cache import cache


def describe(name, store, q_max):
    b = B.FIELDS[name]
    fld = b.run(store)
    slope, _ = R.annulus_growth(fld)
    am = fld.annulus_max()
    print(f"[{name}] {b.note}")
    print("  annulus max: " + ", ".join(f"{j}:{v:.2f}" for j, v in sorted(am.items())))
    print(f"  growth exponent {slope:.4f}, flagged {fld.flagged_count()}")
    q_grid = tuple(np.arange(1.0, q_max + 1e-9, 0.25))
    for g in B.GAMMA_SWEEP if b.family.mode.value == "MODEL" else (b.gamma,):
        rep = R.lp_probe(fld.with_gamma(g), q_grid)
        print(f"  gamma {g}: p* {float(rep.p_star_predicted):.3f}  p_hat {rep.p_hat_empirical:.3f}  "
              f"residual {rep.fit_residual:.3f}  {rep.verdict.value} {rep.note}")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("fields", nargs="*", default=list(B.FIELDS), choices=list(B.FIELDS))
    ap.add_argument("--q-max", type=float, default=60.0)
    args = ap.parse_args(argv)
    store = cache()
    for name in args.fields:
        describe(name, store, args.q_max)
    return 0


if __name__ == "__main__":
    sys.exit(main())
