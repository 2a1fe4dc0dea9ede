"""Acceptance gate: one test per criterion, each recording a PASS/FAIL line."""

import dataclasses
import functools
import time
from contextlib import contextmanager

from commnet.bisim import Equivalent, Inequivalent, audit, check, check_up_to_loss, up_to_loss
from commnet.cli import main
from commnet.dsl import builtin, builtin_names, parse_process, pretty
from commnet.export import to_pnml
from commnet.net import to_net, to_process
from commnet.process import Par, Restrict, Stop, free_channels, fresh_name, normalize
from commnet.rewrite import Side, builtin_rules, builtin_script, replay, rule_named, validate_rule
from commnet.semantics import AbstractionParams, env_in, env_out

from gen import NAMES, corpus
from test_export import pnml_counts

RECEIVERS = ["r0", "r1", "r2", "r3"]
SIZES = {"distributor-split": (1, 2, 3), "distributor-target-fusion": (1, 2),
         "idempotency-distributor": (0, 1, 2)}


@contextmanager
def criterion(record, n, title):
    info = {}
    try:
        yield info
    except BaseException:
        record[n] = f"criterion {n} FAIL: {title}"
        print(record[n])
        raise
    record[n] = f"criterion {n} PASS: {title}" + (f" ({info['detail']})" if "detail" in info else "")
    print(record[n])


# -- shared computations (criterion 8 audits exactly these verdicts) -----------

@functools.lru_cache(maxsize=None)
def bounded_equivalence():
    runs = []
    for budget, cap in ((1, 1), (2, 2)):
        t0 = time.perf_counter()
        res = check_up_to_loss(builtin("M"), builtin("D"), RECEIVERS, AbstractionParams(budget, cap))
        runs.append(((budget, cap), res, time.perf_counter() - t0))
    return runs


@functools.lru_cache(maxsize=None)
def unreduced_equivalence():
    # cross-check of the reduced construction on the full state space
    return check_up_to_loss(builtin("M"), builtin("D"), RECEIVERS, AbstractionParams(1, 1), reduce=False)


@functools.lru_cache(maxsize=None)
def bounded_inequivalence():
    return [check(builtin("M"), builtin("D"), AbstractionParams(1, 1), reduce=reduce)
            for reduce in (True, False)]


@functools.lru_cache(maxsize=None)
def rule_verdicts():
    out = {r.name: validate_rule(r, SIZES.get(r.name, (1,))) for r in builtin_rules()}
    split = rule_named("distributor-split")
    corrupted = dataclasses.replace(split, name="distributor-split-without-duplicator",
                                    lhs=Side(split.lhs.parts[1:]), rhs=Side(split.rhs.parts[1:]))
    out[corrupted.name] = validate_rule(corrupted, (2, 3))
    return out


@functools.lru_cache(maxsize=None)
def random_terms():
    return corpus(1000)


@functools.lru_cache(maxsize=None)
def normalization_soundness():
    return [(p, check(p, normalize(p), reduce=False)) for p in random_terms()[::10]]


# -- criteria -------------------------------------------------------------------

def test_criterion_1_proof_replay(acceptance):
    with criterion(acceptance, 1, "proof replay reaches lossy D; truncations match fig5-fig8") as c:
        t0 = time.perf_counter()
        assert main(["replay", "paper-proof", "--start=builtin:lossyM"]) == 0
        final, reports = replay(builtin_script("paper-proof"), builtin("lossyM"))
        elapsed = time.perf_counter() - t0
        target = up_to_loss(builtin("D"), RECEIVERS)
        assert normalize(final) == normalize(target)
        # surface form too: the surviving bound channel is named m
        assert normalize(final, canonical_names=False) == normalize(target, canonical_names=False)
        assert elapsed < 10
        script = builtin_script("paper-proof")
        for phase, fig in zip((1, 2, 3, 4), ("fig5", "fig6", "fig7", "fig8")):
            part, _ = replay(script.truncate(phase), builtin("lossyM"))
            assert normalize(part) == normalize(builtin(fig)), fig
        c["detail"] = f"{len(reports)} steps, {elapsed:.2f} s"


def test_criterion_2_bounded_equivalence(acceptance):
    with criterion(acceptance, 2, "M and D weakly bisimilar up to loss at (1,1) and (2,2)") as c:
        details = []
        for (budget, cap), res, secs in bounded_equivalence():
            states = len(res.left.states) + len(res.right.states)
            assert isinstance(res, Equivalent)
            assert secs < 60 and states < 10**6
            details.append(f"({budget},{cap}): {states} states {secs:.1f} s")
        full = unreduced_equivalence()
        assert isinstance(full, Equivalent)
        details.append(f"unreduced (1,1): {len(full.left.states) + len(full.right.states)} states")
        c["detail"] = "; ".join(details)


def test_criterion_3_bounded_inequivalence(acceptance):
    with criterion(acceptance, 3, "M and D distinguishable without losers; counterexample replays") as c:
        for res in bounded_inequivalence():
            assert isinstance(res, Inequivalent)
            assert audit(res)
            labels = res.trace_labels()
            assert env_in("s0") in labels and env_out("r3") in labels
            assert [lab for _, lab in res.main_line()] == [env_in("s0"), env_out("r3")]
        c["detail"] = f"depth {bounded_inequivalence()[0].depth}"


def test_criterion_4_rule_validation(acceptance):
    with criterion(acceptance, 4, "all rules validate; corrupted split refuted") as c:
        verdicts = rule_verdicts()
        corrupted = verdicts["distributor-split-without-duplicator"]
        for name, results in verdicts.items():
            if results is corrupted:
                continue
            assert results and all(isinstance(r, Equivalent) for r in results), name
        assert all(isinstance(r, Inequivalent) for r in corrupted)
        c["detail"] = f"{sum(len(v) for v in verdicts.values())} instances"


def _law_instances(p, q, r):
    free = free_channels(p)
    a = next((n for n in NAMES if n not in free), fresh_name("z", free))
    yield "unit-left", Par(Stop(), p), p
    yield "unit-right", Par(p, Stop()), p
    yield "associativity", Par(Par(p, q), r), Par(p, Par(q, r))
    yield "commutativity", Par(p, q), Par(q, p)
    yield "scope-extension", Par(p, Restrict(a, q)), Restrict(a, Par(p, q))
    yield "binder-commutation", Restrict("a", Restrict("b", q)), Restrict("b", Restrict("a", q))
    yield "scope-redundancy", Restrict(a, p), p


def test_criterion_5_structural_laws(acceptance):
    with criterion(acceptance, 5, "normalize identifies the structural laws; p ~ normalize(p)") as c:
        terms = random_terms()
        assert len(terms) >= 1000
        laws = 0
        for i, p in enumerate(terms):
            q, r = terms[(i + 1) % len(terms)], terms[(i + 7) % len(terms)]
            for name, lhs, rhs in _law_instances(p, q, r):
                assert normalize(lhs) == normalize(rhs), (name, pretty(lhs))
                laws += 1
        sound = normalization_soundness()
        assert len(sound) == 100
        for p, res in sound:
            assert isinstance(res, Equivalent), pretty(p)
        c["detail"] = f"{laws} law instances, {len(sound)} checker cases"


def test_criterion_6_roundtrips(acceptance):
    with criterion(acceptance, 6, "parse/pretty, net/process and PNML roundtrips") as c:
        for name in builtin_names():
            p = builtin(name)
            assert parse_process(pretty(p)) == p
        terms = random_terms()
        for p in terms:
            assert parse_process(pretty(p)) == p
            n = to_net(p)
            assert normalize(to_process(n)) == normalize(p)
            places, transitions, _ = pnml_counts(to_pnml(n))
            assert (places, transitions) == (len(n.places), len(n.transitions))
        c["detail"] = f"{len(builtin_names())} builtins, {len(terms)} random terms"


def test_criterion_7_counts(acceptance):
    with criterion(acceptance, 7, "net sizes of D and M") as c:
        d, m = to_net(builtin("D")), to_net(builtin("M"))
        assert (len(d.places), len(d.transitions)) == (9, 10)
        assert (len(m.places), len(m.transitions)) == (13, 19)
        c["detail"] = "D 9/10, M 13/19"


def test_criterion_8_self_audit(acceptance):
    with criterion(acceptance, 8, "every verdict above passes the independent audit") as c:
        results = [res for _, res, _ in bounded_equivalence()]
        results += [unreduced_equivalence(), *bounded_inequivalence()]
        results += [r for rs in rule_verdicts().values() for r in rs]
        results += [res for _, res in normalization_soundness()]
        _, reports = replay(builtin_script("paper-proof"), builtin("lossyM"), validate=True)
        results += [r.verdict for r in reports if r.verdict is not None]
        failed = [i for i, r in enumerate(results) if not audit(r)]
        assert not failed
        c["detail"] = f"{len(results)} verdicts audited"
