"""Command-line entry point.

Exit status: 0 success or equivalent, 1 inequivalent or failed replay,
2 usage or parse error, 3 state-count guard tripped.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

from .bisim import Equivalent, Inequivalent, Position, audit, check, check_up_to_loss, format_counterexample
from .dsl import ParseError, load_process, pretty
from .export import RenderOptions, to_dot, to_pnml
from .net import to_net
from .process import normalize
from .rewrite import ReplayError, ScriptError, builtin_script, parse_script, replay
from .semantics import AbstractionParams, StateLimitExceeded, build_lts, build_reduced_lts

EXIT_OK, EXIT_INEQUIVALENT, EXIT_USAGE, EXIT_GUARD = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _params(args) -> AbstractionParams:
    try:
        return AbstractionParams(args.budget, args.cap, args.mode, args.colors)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _load(ref: str):
    try:
        return load_process(ref)
    except (OSError, KeyError) as e:
        raise UsageError(f"cannot read {ref}: {e}") from None
    except ParseError as e:
        raise UsageError(f"{ref}: {e}") from None


def _strategy_json(res: Inequivalent) -> dict:
    ids: dict[int, int] = {}
    table: list[dict] = []
    systems = {"left": res.left, "right": res.right}
    stack = [res.strategy]
    order: list[Position] = []
    while stack:
        pos = stack.pop()
        if id(pos) in ids:
            continue
        ids[id(pos)] = len(order)
        order.append(pos)
        stack.extend(reversed(list(pos.move.responses.values())))
    for pos in order:
        mv = pos.move
        other = "right" if mv.side == "left" else "left"
        table.append({
            "id": ids[id(pos)],
            "left": res.left.describe(pos.left),
            "right": res.right.describe(pos.right),
            "move": {
                "side": mv.side,
                "label": str(mv.label),
                "target": systems[mv.side].describe(mv.target),
                "responses": [{"state": systems[other].describe(r), "next": ids[id(nxt)]}
                              for r, nxt in mv.responses.items()],
            },
        })
    return {"depth": res.depth, "root": 0, "positions": table}


def _emit(args, report: dict, text: str):
    if args.json:
        print(json.dumps(report, indent=2))
    else:
        print(text)


def cmd_check(args) -> int:
    params = _params(args)
    p, q = _load(args.left), _load(args.right)
    loss = [c for c in (args.up_to_loss or "").split(",") if c]
    t0 = time.perf_counter()
    try:
        if args.up_to_loss is not None:
            res = check_up_to_loss(p, q, loss, params, reduce=not args.full)
        else:
            res = check(p, q, params, reduce=not args.full)
    except ValueError as e:
        raise UsageError(str(e)) from None
    elapsed = time.perf_counter() - t0
    audited = audit(res) if args.audit else None
    verdict = "equivalent" if isinstance(res, Equivalent) else "inequivalent"
    report = {
        "command": "check",
        "left": args.left,
        "right": args.right,
        "verdict": verdict,
        "params": params.as_dict(),
        "up_to_loss": loss if args.up_to_loss is not None else None,
        "reduced": not args.full,
        "states": {"left": len(res.left.states), "right": len(res.right.states)},
        "seconds": round(elapsed, 3),
        "audit": audited,
        "counterexample": _strategy_json(res) if isinstance(res, Inequivalent) else None,
    }
    lines = [
        f"verdict: {verdict}",
        f"parameters: {params.describe()}",
        f"up to loss in: {', '.join(loss) if args.up_to_loss is not None else '(plain weak bisimilarity)'}",
        f"states: left {len(res.left.states)}, right {len(res.right.states)}"
        + (" (local subnets reduced)" if not args.full else " (full state space)"),
    ]
    if audited is not None:
        lines.append(f"audit: {'passed' if audited else 'FAILED'}")
    if isinstance(res, Inequivalent):
        lines.append(f"counterexample (attacker strategy, depth {res.depth}; left={args.left}, right={args.right}):")
        lines.append(format_counterexample(res, None if args.max_lines <= 0 else args.max_lines))
    _emit(args, report, "\n".join(lines))
    if audited is False:
        return EXIT_INEQUIVALENT
    return EXIT_OK if res else EXIT_INEQUIVALENT


def _script(ref: str):
    try:
        if os.path.exists(ref):
            with open(ref, encoding="utf-8") as fh:
                return parse_script(fh.read(), ref)
        name = ref[:-len(".cnproof")] if ref.endswith(".cnproof") else ref
        return builtin_script(os.path.basename(name))
    except ScriptError as e:
        raise UsageError(f"{ref}: {e}") from None
    except KeyError as e:
        raise UsageError(f"no such proof script: {ref} ({e})") from None


def cmd_replay(args) -> int:
    params = _params(args)
    script = _script(args.script)
    if args.upto is not None:
        script = script.truncate(args.upto)
    start = _load(args.start)
    expect = _load(args.expect) if args.expect else None
    t0 = time.perf_counter()
    try:
        final, reports = replay(script, start, validate=args.validate, params=params)
    except ReplayError as e:
        report = {"command": "replay", "script": args.script, "ok": False, "failed_step": e.index,
                  "error": str(e), "params": params.as_dict(), "steps": [], "final": None,
                  "matches_expected": None}
        text = f"replay failed at step {e.index}: {e}"
        if isinstance(e.counterexample, Inequivalent):
            text += "\n" + format_counterexample(e.counterexample, 40)
        _emit(args, report, text)
        return EXIT_INEQUIVALENT
    elapsed = time.perf_counter() - t0
    matches = None if expect is None else normalize(final) == normalize(expect)
    steps = []
    lines = []
    for r in reports:
        b = ", ".join(f"{k}={v if isinstance(v, str) else '[' + ', '.join(v) + ']'}"
                      for k, v in sorted(r.binding.items()))
        v = None if r.verdict is None else ("equivalent" if r.verdict else "inequivalent")
        steps.append({"index": r.index, "phase": r.phase, "rule": r.rule, "direction": r.direction,
                      "binding": {k: (x if isinstance(x, str) else list(x)) for k, x in r.binding.items()},
                      "digest": r.digest, "validation": v})
        lines.append(f"[{r.index:>2}] step {r.phase}: {r.rule} {r.direction} {{{b}}}"
                     + (f"  validated: {v}" if v else ""))
    lines.append(f"final: {pretty(final)}")
    if matches is not None:
        lines.append(f"matches {args.expect} modulo normalize: {'yes' if matches else 'no'}")
    lines.append(f"{len(reports)} steps in {elapsed:.3f} s; parameters: {params.describe()}")
    report = {"command": "replay", "script": args.script, "ok": matches is not False,
              "failed_step": None, "error": None, "params": params.as_dict(), "steps": steps,
              "final": pretty(final), "matches_expected": matches}
    _emit(args, report, "\n".join(lines))
    return EXIT_INEQUIVALENT if matches is False else EXIT_OK


def cmd_export(args) -> int:
    net = to_net(_load(args.file))
    if args.format == "dot":
        sys.stdout.write(to_dot(net, RenderOptions(sugar_glyphs=not args.explicit_unreliability)))
    else:
        sys.stdout.write(to_pnml(net))
    return EXIT_OK


def cmd_lts(args) -> int:
    params = _params(args)
    net = to_net(_load(args.file))
    lts = (build_reduced_lts if args.reduced else build_lts)(net, params)
    print(f"# lts {args.file} {params.describe()}{' reduced' if args.reduced else ''}")
    print(f"states {len(lts.states)}")
    print(f"edges {len(lts.edges)}")
    for i in range(len(lts.states)):
        print(f"state {i} {lts.describe(i)}")
    for s, l, t in lts.edges:
        print(f"edge {s} {lts.labels[l]} {t}")
    return EXIT_OK


def _add_params(p: argparse.ArgumentParser):
    d = AbstractionParams()
    p.add_argument("--budget", type=int, default=d.env_budget, help="environment injections allowed")
    p.add_argument("--cap", type=int, default=d.cap, help="counter cap before saturation")
    p.add_argument("--mode", choices=["saturating", "hard"], default=d.mode)
    p.add_argument("--colors", type=int, default=d.colors, help="distinguishable packet colors")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="commnet", description="Communication nets: check, replay, export.")
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="weak bisimilarity of two processes")
    c.add_argument("left")
    c.add_argument("right")
    c.add_argument("--up-to-loss", metavar="CH,...", help="compose both sides with losers on these channels")
    _add_params(c)
    c.add_argument("--full", action="store_true", help="explore full state spaces (no local reduction)")
    c.add_argument("--audit", action="store_true", help="independently re-verify the verdict")
    c.add_argument("--max-lines", type=int, default=60, help="counterexample lines to print (0: all)")
    c.add_argument("--json", action="store_true")
    c.set_defaults(func=cmd_check)

    r = sub.add_parser("replay", help="replay a proof script")
    r.add_argument("script", help="script path or builtin script name (e.g. paper-proof)")
    r.add_argument("--start", required=True, help="start process: file or builtin:NAME")
    r.add_argument("--expect", help="process the final term must equal modulo normalize")
    r.add_argument("--upto", type=int, help="only replay phases up to this step number")
    r.add_argument("--validate", action="store_true", help="bounded-check every rewrite")
    _add_params(r)
    r.add_argument("--json", action="store_true")
    r.set_defaults(func=cmd_replay)

    e = sub.add_parser("export", help="render a net as DOT or PNML")
    e.add_argument("file")
    e.add_argument("--format", choices=["dot", "pnml"], default="dot")
    e.add_argument("--explicit-unreliability", action="store_true",
                   help="draw loser/duplicator transitions instead of glyphs")
    e.set_defaults(func=cmd_export)

    s = sub.add_parser("lts", help="dump the labelled transition system")
    s.add_argument("file")
    _add_params(s)
    s.add_argument("--reduced", action="store_true", help="reduce the local subnet first")
    s.set_defaults(func=cmd_lts)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except StateLimitExceeded as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_GUARD
    except BrokenPipeError:
        # output consumer went away (e.g. piped into head)
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
