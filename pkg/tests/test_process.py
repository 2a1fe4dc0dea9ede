from hypothesis import given, settings

from commnet.process import (
    STOP, Bridge, Distribute, Duplicator, Duploser, Loser, Par, Restrict, Stop, channels,
    count_distributors, desugar, flatten, free_channels, fresh_name, is_core, normalize,
    par_all, par_over, substitute,
)

from gen import processes


def test_desugar_sugar_forms():
    assert desugar(Bridge("a", "b")) == Distribute("a", ("b",))
    assert desugar(Loser("a")) == Distribute("a", ())
    assert desugar(Duplicator("a")) == Distribute("a", ("a", "a"))
    assert desugar(Duploser("a")) == Par(Distribute("a", ()), Distribute("a", ("a", "a")))
    assert desugar(Stop()) == Stop()


def test_distribute_targets_are_tuples():
    assert Distribute("a", ["b", "c"]).targets == ("b", "c")


def test_free_channels_examples():
    m = Restrict("m", Par(Bridge("s0", "m"), Bridge("m", "r0")))
    assert free_channels(m) == {"s0", "r0"}
    assert free_channels(Stop()) == frozenset()
    assert free_channels(Duplicator("a")) == {"a"}
    assert channels(m) == {"s0", "r0", "m"}


def test_substitute_examples():
    assert substitute(Bridge("a", "c"), {"a": "b"}) == Bridge("b", "c")
    bound = Restrict("a", Bridge("a", "c"))
    assert substitute(bound, {"a": "b"}) == bound
    assert substitute(Restrict("x", Bridge("a", "x")), {"a": "x"}) == Restrict("x'", Bridge("x", "x'"))


def test_par_over_examples():
    assert par_over("a", ["r1", "l13"], Loser("a")) == Par(Loser("r1"), Loser("l13"))
    assert par_over("a", [], Bridge("a", "b")) == STOP
    assert par_over("a", ["b"], Bridge("c", "a")) == Bridge("c", "b")


def test_par_all_and_counts():
    assert par_all([]) == Stop()
    p = par_all([Loser("a"), Duploser("b"), Bridge("a", "b")])
    assert count_distributors(p) == 4


def test_fresh_name_primes():
    assert fresh_name("a", {"b"}) == "a"
    assert fresh_name("a", {"a", "a'"}) == "a''"


def test_normalize_examples():
    p = Bridge("a", "b")
    assert normalize(Par(Stop(), p)) == normalize(p)
    assert normalize(Restrict("a", Stop())) == Stop()
    q = Par(Bridge("x", "y"), Restrict("a", Bridge("a", "z")))
    assert normalize(q) == Restrict("#0", Par(Distribute("x", ("y",)), Distribute("#0", ("z",))))


def test_normalize_keeps_target_order_and_multiplicity():
    assert normalize(Distribute("a", ("c", "b", "b"))) == Distribute("a", ("c", "b", "b"))


def test_normalize_skips_names_free_in_term():
    p = Par(Bridge("#0", "b"), Restrict("m", Bridge("m", "#0")))
    n = normalize(p)
    assert isinstance(n, Restrict) and n.channel == "#1"


def test_canonical_names_independent_of_binder_order():
    p = Restrict("u", Restrict("v", Par(Bridge("u", "v"), Bridge("v", "r"))))
    q = Restrict("v", Restrict("u", Par(Bridge("v", "r"), Bridge("u", "v"))))
    assert normalize(p) == normalize(q)


def test_named_normal_form_keeps_surface_names():
    p = Restrict("m", Par(Bridge("s", "m"), Bridge("m", "r")))
    assert normalize(p, canonical_names=False) == Restrict(
        "m", Par(Distribute("m", ("r",)), Distribute("s", ("m",))))


def test_flatten_primes_clashing_binders():
    p = Par(Restrict("a", Bridge("a", "b")), Par(Restrict("a", Bridge("b", "a")), Bridge("a", "c")))
    f = flatten(p)
    assert len(f.binders) == 2 and "a" not in f.binders
    assert f.free() == {"a", "b", "c"}


@settings(max_examples=200, deadline=None)
@given(processes)
def test_desugar_idempotent_and_core(p):
    d = desugar(p)
    assert desugar(d) == d
    assert is_core(d)
    assert free_channels(d) == free_channels(p)


@settings(max_examples=200, deadline=None)
@given(processes, processes, processes)
def test_normalize_monoid_laws(p, q, r):
    n = normalize(p)
    assert normalize(n) == n
    assert normalize(Par(p, q)) == normalize(Par(q, p))
    assert normalize(Par(Par(p, q), r)) == normalize(Par(p, Par(q, r)))
    assert normalize(Par(Stop(), p)) == n == normalize(Par(p, Stop()))


@settings(max_examples=200, deadline=None)
@given(processes)
def test_normalize_insensitive_to_bound_renaming(p):
    # rename every binder to a fresh name; the canonical form must not change
    def rename(t, k=[0]):
        if isinstance(t, Restrict):
            k[0] += 1
            new = f"q{k[0]}"
            return Restrict(new, rename(substitute(t.body, {t.channel: new})))
        if isinstance(t, Par):
            return Par(rename(t.left), rename(t.right))
        return t
    assert normalize(rename(p)) == normalize(p)


@settings(max_examples=200, deadline=None)
@given(processes)
def test_normalize_preserves_free_channels(p):
    assert free_channels(normalize(p)) == free_channels(p)
