from __future__ import annotations

import random
from fractions import Fraction

from hypothesis import assume, given, settings, strategies as st

from nmforge import doob
from nmforge.lifting import lift_module, lifting_axioms, make_lifting
from nmforge.measure import build_chain, make_space
from nmforge.module_core import pointwise_norm
from nmforge.pullback import pullback_module
from nmforge.scenario import generate_scenario
from nmforge.weakstar import pr

rationals = st.fractions(min_value=-20, max_value=20, max_denominator=6)


@st.composite
def spaces_with_chains(draw, refining=False):
    n = draw(st.integers(2, 8))
    weights = draw(st.lists(st.fractions(min_value=0, max_value=3, max_denominator=4), min_size=n, max_size=n))
    assume(any(w > 0 for w in weights))
    S = make_space([f"p{i}" for i in range(n)], weights)
    gens = draw(st.lists(st.sets(st.integers(0, n - 1), min_size=1), max_size=4))
    if refining:
        gens += [{i} for i in range(n - 1)]
    f = draw(st.lists(rationals, min_size=n, max_size=n))
    return S, build_chain(S, [sorted(g) for g in gens]), tuple(f)


@settings(max_examples=80, deadline=None)
@given(spaces_with_chains())
def test_cond_exp_contracts_and_towers(data):
    S, ch, f = data
    mart = doob.martingale(ch, f)
    for k, pk in enumerate(mart):
        assert doob.l1_norm(S, pk) <= doob.l1_norm(S, f)
        for j in range(len(ch.levels)):
            assert S.ae_equal(doob.cond_exp(ch, j, pk), mart[min(j, k)])


@settings(max_examples=80, deadline=None)
@given(spaces_with_chains(refining=True), st.lists(rationals, min_size=8, max_size=8), rationals, rationals)
def test_rep_linear_and_exact(data, g, a, b):
    S, ch, f = data
    assume(ch.fully_refining)
    g = tuple(g[: len(f)])
    rf, rg = doob.rep(ch, f), doob.rep(ch, g)
    rc = doob.rep(ch, [a * s + b * t for s, t in zip(f, g)])
    assert S.ae_equal(rf.rep, f)
    assert S.mass(set(range(len(S))) - rf.leb_set) == 0
    for x in rf.leb_set & rg.leb_set & rc.leb_set:
        assert rc.rep[x] == a * rf.rep[x] + b * rg.rep[x]


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 9), st.data())
def test_retraction_liftings_satisfy_axioms(n, data):
    weights = data.draw(st.lists(st.sampled_from([0, Fraction(1, 2), 1]), min_size=n, max_size=n))
    assume(any(weights))
    S = make_space([f"p{i}" for i in range(n)], weights)
    pos = sorted(S.support)
    retr = {x: data.draw(st.sampled_from(pos)) for x in S.null_points}
    ell = make_lifting(S, retr, check=False)
    assert all(lifting_axioms(ell).values())


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 10_000))
def test_pullback_norm_identity_on_generated(seed):
    sc = generate_scenario(seed)
    phi, M = sc.maps["phi"], sc.modules["M"]
    pb = pullback_module(phi, M, rng=random.Random(seed))
    v = M.random_element(random.Random(seed))
    lhs = pointwise_norm(pb.pull(v))
    rhs = phi.compose_function(pointwise_norm(v))
    assert all(lhs[y] == rhs[y] for y in phi.source.support)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 10_000))
def test_lift_norm_identity_on_generated(seed):
    sc = generate_scenario(seed)
    M, ell = sc.modules["M"], sc.liftings["lX"]
    v = M.random_element(random.Random(seed))
    assert pointwise_norm(lift_module(ell, M).lift(v)) == ell.lift_function(pointwise_norm(v))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 10_000), st.data())
def test_pr_preserves_integrals(seed, data):
    phi = generate_scenario(seed).maps["phi"]
    Y, X = phi.source, phi.target
    f = data.draw(st.lists(rationals, min_size=len(Y), max_size=len(Y)))
    assert X.integrate(pr(phi, f)) == Y.integrate(f)
