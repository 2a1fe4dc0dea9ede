"""Print the attacker strategy separating M from D when no losers are added.

    python scripts/counterexample.py --max-lines 40
"""

import argparse

from commnet.bisim import audit, check, format_counterexample
from commnet.dsl import builtin
from commnet.semantics import AbstractionParams


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--budget", type=int, default=1)
    ap.add_argument("--cap", type=int, default=1)
    ap.add_argument("--full", action="store_true", help="no local-subnet reduction")
    ap.add_argument("--max-lines", type=int, default=40)
    args = ap.parse_args()

    res = check(builtin("M"), builtin("D"), AbstractionParams(args.budget, args.cap), reduce=not args.full)
    if res:
        print("M and D are weakly bisimilar at these parameters")
        return
    print(f"depth {res.depth}; main line: "
          + " . ".join(f"{side}:{label}" for side, label in res.main_line()))
    print(f"strategy replays against all defender replies: {audit(res)}")
    print(format_counterexample(res, args.max_lines))


if __name__ == "__main__":
    main()
