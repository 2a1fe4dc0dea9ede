"""Schematic rewriting modulo structural congruence, and proof-script replay.

Terms are rewritten in their flat form: one binder block over a multiset of
distributors.  A rule side is a multiset of distributor patterns, so matching
is associative-commutative by construction, and binder mobility comes for free
from flattening.  Patterns reuse the sugar of the process language:
``bridge(a, b)`` is ``a => [b]``, ``loser(a)`` is ``a => []`` and so on.
"""

from __future__ import annotations

import hashlib
import itertools
import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterator, Mapping, Sequence, Union

from .bisim import BisimResult, check
from .dsl import pretty
from .process import Flat, Process, flatten, fresh_name, from_flat, normalize
from .semantics import AbstractionParams

__all__ = [
    "PDist", "Each", "Side", "Distinct", "RewriteRule", "Binding", "RewriteError",
    "bridge", "loser", "dup", "duploser", "builtin_rules", "rule_named",
    "find_matches", "apply", "instantiate", "validate_rule", "digest",
    "ScriptStep", "ProofScript", "ScriptError", "StepReport", "ReplayError",
    "parse_script", "builtin_script", "replay", "FORWARD", "REVERSE", "RENAME",
]

FORWARD, REVERSE = "forward", "reverse"
RENAME = "rename"

Binding = dict  # metavariable -> channel, or tuple of channels for list metavariables


# -- patterns ------------------------------------------------------------------

@dataclass(frozen=True)
class PDist:
    """``source => [targets]``; ``targets`` is a tuple of metavariables or the
    name of a list metavariable.  A leading ``=`` marks a literal channel."""

    source: str
    targets: Union[tuple[str, ...], str] = ()

    def show(self, env: Mapping) -> str:
        def r(m):
            if m.startswith("="):
                return m[1:]
            v = env.get(m, m)
            return v if isinstance(v, str) else m
        if isinstance(self.targets, str):
            v = env.get(self.targets)
            ts = ", ".join(v) if v is not None else self.targets + "..."
        else:
            ts = ", ".join(map(r, self.targets))
        return f"{r(self.source)} => [{ts}]"


@dataclass(frozen=True)
class Each:
    """``∏ elem ∈ listvar . parts``."""

    listvar: str
    elem: str
    parts: tuple[PDist, ...]


@dataclass(frozen=True)
class Side:
    parts: tuple[Union[PDist, Each], ...]
    binders: tuple[str, ...] = ()    # metavariables restricted around the side

    def metas(self) -> set[str]:
        out = set(self.binders)
        for c in self.parts:
            dists = c.parts if isinstance(c, Each) else (c,)
            if isinstance(c, Each):
                out.add(c.listvar)
            for d in dists:
                out.add(d.source)
                out.update([d.targets] if isinstance(d.targets, str) else d.targets)
            if isinstance(c, Each):
                out.discard(c.elem)
        return {m for m in out if not m.startswith("=")}


@dataclass(frozen=True)
class Distinct:
    """All listed channels, with list metavariables expanded, are pairwise distinct."""

    metas: tuple[str, ...]

    def holds(self, b: Mapping) -> bool:
        chans = []
        for m in self.metas:
            v = b[m]
            chans.extend([v] if isinstance(v, str) else v)
        return len(set(chans)) == len(chans)

    def __str__(self):
        return "distinct(" + ", ".join(self.metas) + ")"


def bridge(a: str, b: str) -> PDist:
    return PDist(a, (b,))


def loser(a: str) -> PDist:
    return PDist(a, ())


def dup(a: str) -> PDist:
    return PDist(a, (a, a))


def duploser(a: str) -> tuple[PDist, PDist]:
    return (loser(a), dup(a))


@dataclass(frozen=True)
class RewriteRule:
    name: str
    lhs: Side
    rhs: Side
    lists: frozenset[str] = frozenset()
    conditions: tuple[Distinct, ...] = ()
    min_len: Mapping[str, int] = field(default_factory=dict)
    description: str = ""

    def sides(self, direction: str) -> tuple[Side, Side]:
        if direction == FORWARD:
            return self.lhs, self.rhs
        if direction == REVERSE:
            return self.rhs, self.lhs
        raise ValueError(f"direction must be {FORWARD!r} or {REVERSE!r}, not {direction!r}")


def _rules() -> list[RewriteRule]:
    split = RewriteRule(
        "distributor-split",
        Side((dup("a"), Each("b", "x", (loser("x"),)), PDist("a", "b"))),
        Side((dup("a"), Each("b", "x", (loser("x"),)), Each("b", "x", (bridge("a", "x"),)))),
        frozenset({"b"}), (Distinct(("a", "b")),), {"b": 1},
        "+a | ?b1 | ... | ?bn | a => [b1..bn]  ~  +a | ?b1 | ... | ?bn | a -> b1 | ... | a -> bn",
    )
    shortcut = RewriteRule(
        "bridge-shortcut-redundancy",
        Side((bridge("a", "b"), bridge("b", "c"), bridge("a", "c"))),
        Side((bridge("a", "b"), bridge("b", "c"))),
        conditions=(Distinct(("a", "b", "c")),),
        description="a -> b | b -> c | a -> c  ~  a -> b | b -> c",
    )
    cycle = Each("b", "x", (bridge("x", "c"), bridge("c", "x")))
    fusion = RewriteRule(
        "distributor-target-fusion",
        Side((*duploser("c"), PDist("a", "b"), cycle)),
        Side((*duploser("c"), bridge("a", "c"), cycle)),
        frozenset({"b"}), (Distinct(("a", "c", "b")),), {"b": 1},
        "*c | a => [b1..bn] | (bi -> c | c -> bi)...  ~  *c | a -> c | (bi -> c | c -> bi)...",
    )
    switch = RewriteRule(
        "bridge-source-switch",
        Side((bridge("a1", "a2"), bridge("a2", "a1"), bridge("a1", "b"))),
        Side((bridge("a1", "a2"), bridge("a2", "a1"), bridge("a2", "b"))),
        conditions=(Distinct(("a1", "a2", "b")),),
        description="a1 -> a2 | a2 -> a1 | a1 -> b  ~  a1 -> a2 | a2 -> a1 | a2 -> b",
    )
    detour = RewriteRule(
        "duploss-detour-collapse",
        Side((*duploser("b"), bridge("a", "b"), bridge("b", "a")), binders=("b",)),
        Side(duploser("a")),
        conditions=(Distinct(("a", "b")),),
        description="new b in { *b | a -> b | b -> a }  ~  *a",
    )
    idem = [
        RewriteRule("idempotency-loser", Side((loser("a"), loser("a"))), Side((loser("a"),)),
                    description="?a | ?a  ~  ?a"),
        RewriteRule("idempotency-duplicator", Side((dup("a"), dup("a"))), Side((dup("a"),)),
                    description="+a | +a  ~  +a"),
        RewriteRule("idempotency-duploser", Side((*duploser("a"), *duploser("a"))),
                    Side(duploser("a")), description="*a | *a  ~  *a"),
        RewriteRule("idempotency-distributor", Side((PDist("a", "t"), PDist("a", "t"))),
                    Side((PDist("a", "t"),)), frozenset({"t"}),
                    description="a => T | a => T  ~  a => T"),
    ]
    return [split, shortcut, fusion, switch, detour, *idem]


_RENAME_RULE = RewriteRule(RENAME, Side(()), Side(()), description="rename bound channel old to new")


def builtin_rules() -> list[RewriteRule]:
    return _rules()


def rule_named(name: str) -> RewriteRule:
    if name == RENAME:
        return _RENAME_RULE
    for r in _rules():
        if r.name == name:
            return r
    known = ", ".join([r.name for r in _rules()] + [RENAME])
    raise KeyError(f"unknown rule {name!r}; known: {known}")


# -- matching ------------------------------------------------------------------

class RewriteError(ValueError):
    pass


@dataclass
class _Nearest:
    depth: int = -1
    binding: dict = field(default_factory=dict)
    reason: str = ""

    def note(self, depth: int, binding: dict, reason: str):
        if depth > self.depth:
            self.depth, self.binding, self.reason = depth, dict(binding), reason


def _bind(b: dict, meta: str, ch: str) -> bool:
    if meta.startswith("="):
        return meta[1:] == ch
    v = b.get(meta)
    if v is None:
        b[meta] = ch
        return True
    return v == ch


def _unify(pd: PDist, src: str, ts: tuple, binding: dict) -> dict | None:
    b = dict(binding)
    if not _bind(b, pd.source, src):
        return None
    if isinstance(pd.targets, str):
        v = b.get(pd.targets)
        if v is None:
            b[pd.targets] = tuple(ts)
        elif Counter(v) != Counter(ts):
            return None
        return b
    if len(pd.targets) != len(ts):
        return None
    for m, t in zip(pd.targets, ts):
        if not _bind(b, m, t):
            return None
    return b


def _expand(each: Each, elems: Sequence[str]) -> list[PDist]:
    lit = lambda m, e: "=" + e if m == each.elem else m  # noqa: E731
    out = []
    for e in elems:
        for p in each.parts:
            ts = p.targets if isinstance(p.targets, str) else tuple(lit(t, e) for t in p.targets)
            out.append(PDist(lit(p.source, e), ts))
    return out


class _Matcher:
    def __init__(self, rule: RewriteRule, side: Side, flat: Flat):
        self.rule, self.side, self.flat = rule, side, flat
        self.dists = list(flat.dists)
        self.nearest = _Nearest()
        simple = [c for c in side.parts if isinstance(c, PDist)]
        each = [c for c in side.parts if isinstance(c, Each)]
        self.work = tuple(simple + each)
        self.total = len(self.work)

    def run(self, seed: dict) -> Iterator[tuple[dict, frozenset]]:
        for b, used in self._solve(self.work, seed, frozenset(), 0):
            reason = self._check(b, used)
            if reason is None:
                yield b, used
            else:
                self.nearest.note(self.total, b, reason)

    def _solve(self, work, b, used, depth):
        if not work:
            yield b, used
            return
        head, rest = work[0], work[1:]
        if isinstance(head, PDist):
            found = False
            for i, (src, ts) in enumerate(self.dists):
                if i in used:
                    continue
                b2 = _unify(head, src, ts, b)
                if b2 is not None:
                    found = True
                    yield from self._solve(rest, b2, used | {i}, depth + 1)
            if not found:
                self.nearest.note(depth, b, f"no distributor matching {head.show(b)}")
            return
        elems = b.get(head.listvar)
        if elems is not None:
            yield from self._solve(tuple(_expand(head, elems)) + rest, b, used, depth + 1)
            return
        # unbound list: subsets of the channels that can play the element in
        # every product over this list
        group = [w for w in work if isinstance(w, Each) and w.listvar == head.listvar]
        cands = []
        for ch in sorted(self.flat.names()):
            probe = tuple(d for g in group for d in _expand(g, [ch]))
            if next(self._solve(probe, b, used, depth), None) is not None:
                cands.append(ch)
        lo = self.rule.min_len.get(head.listvar, 0)
        if len(cands) < lo:
            self.nearest.note(depth, b, f"too few candidates for list {head.listvar}")
        for k in range(max(lo, 0), len(cands) + 1):
            for sub in itertools.combinations(cands, k):
                b2 = dict(b)
                b2[head.listvar] = sub
                yield from self._solve(tuple(_expand(head, sub)) + rest, b2, used, depth + 1)

    def _check(self, b: dict, used: frozenset) -> str | None:
        for m, n in self.rule.min_len.items():
            if m in b and len(b[m]) < n:
                return f"list {m} needs at least {n} channels"
        for cond in self.rule.conditions:
            if all(m in b for m in cond.metas) and not cond.holds(b):
                return f"side condition {cond} fails"
        for m in self.side.binders:
            ch = b[m]
            if ch not in self.flat.binders:
                return f"{m}={ch} must be a bound channel"
            for i, (src, ts) in enumerate(self.dists):
                if i not in used and (src == ch or ch in ts):
                    return f"bound channel {ch} occurs outside the matched part"
        return None


def _normalize_binding(binding: Mapping | None, rule: RewriteRule) -> dict:
    out = {}
    for k, v in (binding or {}).items():
        if isinstance(v, str):
            if k in rule.lists:
                raise RewriteError(f"metavariable {k} expects a list of channels")
            out[k] = v
        else:
            if k not in rule.lists:
                raise RewriteError(f"metavariable {k} expects a single channel")
            out[k] = tuple(v)
    return out


def _key(b: Mapping):
    return sorted((k, (v,) if isinstance(v, str) else tuple(v)) for k, v in b.items())


def _matches(rule, direction, flat, seed):
    src, _ = rule.sides(direction)
    unknown = set(seed) - rule.lhs.metas() - rule.rhs.metas()
    if unknown:
        raise RewriteError(f"rule {rule.name} has no metavariable(s) {', '.join(sorted(unknown))}")
    m = _Matcher(rule, src, flat)
    seen, out = set(), []
    for b, used in m.run(dict(seed)):
        k = repr(_key(b))
        if k not in seen:
            seen.add(k)
            out.append((b, used))
    out.sort(key=lambda bu: _key(bu[0]))
    return out, m.nearest


def find_matches(rule: RewriteRule, direction: str, p: Process,
                 binding: Mapping | None = None) -> list[Binding]:
    """All bindings under which ``direction``'s source side occurs in ``p``."""
    if rule.name == RENAME:
        raise RewriteError("rename has no pattern; apply it with old= and new=")
    seed = _normalize_binding(binding, rule)
    found, _ = _matches(rule, direction, flatten(p), seed)
    return [b for b, _ in found]


def instantiate(side: Side, b: Mapping) -> list[tuple[str, tuple[str, ...]]]:
    def r(m):
        return m[1:] if m.startswith("=") else b[m]
    out = []
    for c in side.parts:
        for d in (_expand(c, b[c.listvar]) if isinstance(c, Each) else (c,)):
            ts = b[d.targets] if isinstance(d.targets, str) else tuple(r(t) for t in d.targets)
            out.append((r(d.source), tuple(ts)))
    return out


@dataclass
class _Applied:
    result: Process
    binding: dict
    before_part: Process
    after_part: Process


def _rename(p: Process, b: Mapping) -> _Applied:
    if set(b) != {"old", "new"}:
        raise RewriteError("rename needs exactly old= and new=")
    f = flatten(p)
    old, new = b["old"], b["new"]
    if old not in f.binders:
        raise RewriteError(f"rename: {old} is not a bound channel")
    if new != old and new in f.names():
        raise RewriteError(f"rename: {new} already occurs in the process")
    r = lambda c: new if c == old else c  # noqa: E731
    g = Flat(tuple(map(r, f.binders)), tuple((r(s), tuple(map(r, ts))) for s, ts in f.dists))
    out = normalize(from_flat(g), canonical_names=False)
    return _Applied(out, dict(b), out, out)


def _apply(rule: RewriteRule, direction: str, binding: Mapping | None, p: Process) -> _Applied:
    if rule.name == RENAME:
        return _rename(p, binding or {})
    seed = _normalize_binding(binding, rule)
    src, dst = rule.sides(direction)
    f = flatten(p)
    fresh = dst.metas() - src.metas()
    given_fresh = {m: seed.pop(m) for m in list(seed) if m in fresh}
    found, nearest = _matches(rule, direction, f, seed)
    if not found:
        shown = ", ".join(f"{k}={_show(v)}" for k, v in sorted(seed.items())) or "no binding"
        near = ", ".join(f"{k}={_show(v)}" for k, v in sorted(nearest.binding.items()))
        raise RewriteError(
            f"{rule.name} {direction} does not match with {shown}; nearest partial match "
            f"{{{near}}} covered {max(nearest.depth, 0)} of {len(src.parts)} components: {nearest.reason}")
    b, used = found[0]
    b = dict(b)
    names = set(f.names())
    for m in sorted(fresh):
        ch = given_fresh.get(m)
        if ch is None:
            ch = fresh_name(m, names)
        elif ch in names:
            raise RewriteError(f"fresh channel {m}={ch} already occurs in the process")
        names.add(ch)
        b[m] = ch
    removed = {b[m] for m in src.binders}
    kept = [d for i, d in enumerate(f.dists) if i not in used]
    added = instantiate(dst, b)
    binders = tuple(x for x in f.binders if x not in removed) + tuple(b[m] for m in dst.binders)
    result = normalize(from_flat(Flat(binders, tuple(kept + added))), canonical_names=False)
    before = from_flat(Flat(tuple(b[m] for m in src.binders), tuple(f.dists[i] for i in sorted(used))))
    after = from_flat(Flat(tuple(b[m] for m in dst.binders), tuple(added)))
    return _Applied(result, b, before, after)


def _show(v) -> str:
    return v if isinstance(v, str) else "[" + ", ".join(v) + "]"


def apply(rule: RewriteRule, direction: str, binding: Mapping | None, p: Process) -> Process:
    """Replace one occurrence of the source side by the instantiated other side.

    ``binding`` may be partial; the first match in the deterministic order of
    ``find_matches`` is used.  Fresh metavariables (restricted channels that
    only the target side mentions) take the given name or a fresh one.  The
    result keeps surface names and is normalized.
    """
    return _apply(rule, direction, binding, p).result


# -- rule validation -----------------------------------------------------------

def _instance(side: Side, b: Mapping) -> Process:
    return from_flat(Flat(tuple(b[m] for m in side.binders), tuple(instantiate(side, b))))


def validate_rule(rule: RewriteRule, sizes: Sequence[int] = (1, 2, 3),
                  params: AbstractionParams = AbstractionParams()) -> list[BisimResult]:
    """Bounded check of ``lhs ≈ rhs`` with fresh channels, one verdict per size.

    List metavariables get ``size`` channels each; rules without them are
    checked once.
    """
    metas = sorted(rule.lhs.metas() | rule.rhs.metas())
    lists = [m for m in metas if m in rule.lists]
    results = []
    for n in (sizes if lists else (None,)):
        b = {}
        for m in metas:
            b[m] = tuple(f"{m}{i}" for i in range(1, n + 1)) if m in rule.lists else m
        results.append(check(_instance(rule.lhs, b), _instance(rule.rhs, b), params))
    return results


# -- proof scripts -------------------------------------------------------------

def digest(p: Process) -> str:
    """sha256 of the pretty-printed canonical normal form."""
    return hashlib.sha256(pretty(normalize(p)).encode()).hexdigest()


@dataclass(frozen=True)
class ScriptStep:
    phase: int
    rule: str
    direction: str
    binding: tuple[tuple[str, Union[str, tuple[str, ...]]], ...]
    expect: str | None = None
    line: int = 0

    def binding_dict(self) -> dict:
        return dict(self.binding)

    def format(self) -> str:
        inner = ", ".join(f"{k}={_show(v)}" for k, v in self.binding)
        text = f"step {self.phase}: {self.rule} {self.direction} {{{inner}}}"
        return text + (f" expect sha256:{self.expect}" if self.expect else "")


@dataclass(frozen=True)
class ProofScript:
    steps: tuple[ScriptStep, ...]
    name: str = ""

    def truncate(self, phase: int) -> "ProofScript":
        """Keep the steps of phases up to and including ``phase``."""
        return ProofScript(tuple(s for s in self.steps if s.phase <= phase), self.name)

    @property
    def phases(self) -> list[int]:
        return sorted({s.phase for s in self.steps})

    def format(self) -> str:
        return "\n".join(s.format() for s in self.steps) + "\n"


class ScriptError(ValueError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


_STEP = re.compile(
    r"step\s+(?P<n>\d+)\s*:\s*(?P<rule>[A-Za-z][\w-]*)\s+(?P<dir>forward|reverse)\s*"
    r"\{(?P<body>[^}]*)\}\s*(?:expect\s+sha256:(?P<dg>[0-9a-f]{64}))?\s*$")
_NAME = r"(?:[A-Za-z_][\w']*|#\d+)"
_COMMENT = re.compile(r"#(?!\d).*$")
_ENTRY = re.compile(rf"\s*(?P<k>{_NAME})\s*=\s*(?:\[(?P<lst>[^\]]*)\]|(?P<one>{_NAME}))\s*(?:,|$)")


def _parse_binding(body: str, line: int):
    out, pos = [], 0
    body = body.strip()
    while pos < len(body):
        m = _ENTRY.match(body, pos)
        if m is None:
            raise ScriptError(line, f"cannot parse binding near {body[pos:]!r}")
        if m.group("one") is not None:
            out.append((m.group("k"), m.group("one")))
        else:
            items = [x.strip() for x in m.group("lst").split(",") if x.strip()]
            for x in items:
                if not re.fullmatch(_NAME, x):
                    raise ScriptError(line, f"bad channel name {x!r}")
            out.append((m.group("k"), tuple(items)))
        pos = m.end()
    keys = [k for k, _ in out]
    if len(set(keys)) != len(keys):
        raise ScriptError(line, "metavariable bound twice")
    return tuple(out)


def parse_script(text: str, name: str = "") -> ProofScript:
    steps = []
    for no, raw in enumerate(text.splitlines(), 1):
        line = _COMMENT.sub("", raw).strip()
        if not line:
            continue
        m = _STEP.match(line)
        if m is None:
            raise ScriptError(no, "expected 'step <n>: <rule> <forward|reverse> {...}'")
        try:
            rule_named(m.group("rule"))
        except KeyError as e:
            raise ScriptError(no, e.args[0]) from None
        steps.append(ScriptStep(int(m.group("n")), m.group("rule"), m.group("dir"),
                                _parse_binding(m.group("body"), no), m.group("dg"), no))
    phases = [s.phase for s in steps]
    if phases != sorted(phases):
        raise ScriptError(steps[0].line if steps else 0, "step numbers must not decrease")
    return ProofScript(tuple(steps), name)


def builtin_script(name: str) -> ProofScript:
    path = resources.files("commnet").joinpath("data").joinpath(f"{name}.cnproof")
    if not path.is_file():
        raise KeyError(f"unknown proof script {name!r}")
    return parse_script(path.read_text(encoding="utf-8"), name)


@dataclass
class StepReport:
    index: int                 # 1-based position in the script
    phase: int
    rule: str
    direction: str
    binding: dict
    before: Process            # normalized, surface names kept
    after: Process
    digest: str
    verdict: BisimResult | None = None


class ReplayError(RuntimeError):
    def __init__(self, index: int, message: str, reports: list | None = None,
                 counterexample: BisimResult | None = None):
        self.index = index
        self.reports = reports or []
        self.counterexample = counterexample
        super().__init__(f"step {index}: {message}")


def replay(script: ProofScript, start: Process, validate: bool = False,
           params: AbstractionParams = AbstractionParams()) -> tuple[Process, list[StepReport]]:
    """Fold the script's rule applications over ``start``.

    With ``validate`` each step's rewritten part is checked against its
    replacement (shared channels treated as free) by the bisimulation checker.
    """
    term = normalize(start, canonical_names=False)
    reports: list[StepReport] = []
    for idx, step in enumerate(script.steps, 1):
        rule = rule_named(step.rule)
        try:
            res = _apply(rule, step.direction, step.binding_dict(), term)
        except RewriteError as e:
            raise ReplayError(idx, str(e), reports) from None
        dg = digest(res.result)
        if step.expect and step.expect != dg:
            raise ReplayError(idx, f"digest mismatch: expected {step.expect}, got {dg}", reports)
        verdict = None
        if validate and rule.name != RENAME:
            verdict = check(res.before_part, res.after_part, params)
            if not verdict:
                raise ReplayError(idx, "rewritten part is not weakly bisimilar to its replacement",
                                  reports, verdict)
        reports.append(StepReport(idx, step.phase, step.rule, step.direction, res.binding,
                                  term, res.result, dg, verdict))
        term = res.result
    return term, reports
