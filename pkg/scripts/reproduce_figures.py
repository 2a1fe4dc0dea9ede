"""Replay the transformation proof phase by phase and render every stage.

Writes one DOT file per stage (the start, after each phase, the final term)
and reports whether each stage matches the corresponding builtin net.

    python scripts/reproduce_figures.py --out figures/
"""

import argparse
from pathlib import Path

from commnet.dsl import builtin, pretty
from commnet.export import to_dot
from commnet.net import to_net
from commnet.process import normalize
from commnet.rewrite import builtin_script, replay

STAGES = {0: "lossyM", 1: "fig5", 2: "fig6", 3: "fig7", 4: "fig8", 5: "lossyD"}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("figures"))
    ap.add_argument("--validate", action="store_true", help="bounded-check each rewrite")
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    script = builtin_script("paper-proof")
    start = builtin("lossyM")
    for phase, name in STAGES.items():
        term, reports = replay(script.truncate(phase), start, validate=args.validate)
        ok = normalize(term) == normalize(builtin(name))
        path = args.out / f"stage{phase}_{name}.dot"
        path.write_text(to_dot(to_net(term)))
        net = to_net(term)
        print(f"phase {phase}: {len(reports):>2} steps, {len(net.places):>2} places, "
              f"{len(net.transitions):>2} transitions, matches {name}: {'yes' if ok else 'NO'} -> {path}")
    print("final:", pretty(term))


if __name__ == "__main__":
    main()
