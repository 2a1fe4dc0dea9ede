"""Sweep abstraction parameters for M versus D composed with losers.

    python scripts/bounded_equivalence.py --budgets 1 2 --caps 1 2 --modes saturating hard

With --plain the bare M versus D check is run as well.  Extracting its
counterexample strategy grows quickly: (1,2) and (2,1) take 15-20 s, and
(2,2) needs more memory than a small machine has.
"""

import argparse
import itertools
import time

from commnet.bisim import audit, check, check_up_to_loss
from commnet.dsl import builtin
from commnet.semantics import AbstractionParams, StateLimitExceeded

RECEIVERS = ["r0", "r1", "r2", "r3"]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--budgets", type=int, nargs="+", default=[1, 2])
    ap.add_argument("--caps", type=int, nargs="+", default=[1, 2])
    ap.add_argument("--modes", nargs="+", default=["saturating"])
    ap.add_argument("--colors", type=int, nargs="+", default=[1])
    ap.add_argument("--full", action="store_true", help="no local-subnet reduction")
    ap.add_argument("--audit", action="store_true")
    ap.add_argument("--plain", action="store_true", help="also check without losers")
    args = ap.parse_args()

    m, d = builtin("M"), builtin("D")
    print(f"{'budget':>6} {'cap':>4} {'mode':>10} {'col':>3} {'losers':>6} {'verdict':>12} "
          f"{'states':>9} {'sec':>7}" + ("  audit" if args.audit else ""))
    for budget, cap, mode, colors in itertools.product(args.budgets, args.caps, args.modes, args.colors):
        params = AbstractionParams(budget, cap, mode, colors)
        for losers in ((True, False) if args.plain else (True,)):
            t0 = time.perf_counter()
            try:
                if losers:
                    res = check_up_to_loss(m, d, RECEIVERS, params, reduce=not args.full)
                else:
                    res = check(m, d, params, reduce=not args.full)
            except StateLimitExceeded as e:
                print(f"{budget:>6} {cap:>4} {mode:>10} {colors:>3} {str(losers):>6}  guard: {e}")
                continue
            secs = time.perf_counter() - t0
            states = len(res.left.states) + len(res.right.states)
            verdict = "equivalent" if res else "inequivalent"
            line = (f"{budget:>6} {cap:>4} {mode:>10} {colors:>3} {str(losers):>6} {verdict:>12} "
                    f"{states:>9} {secs:>7.2f}")
            if args.audit:
                line += f"  {'ok' if audit(res) else 'FAILED'}"
            print(line, flush=True)


if __name__ == "__main__":
    main()
