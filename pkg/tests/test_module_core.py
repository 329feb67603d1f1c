from __future__ import annotations

import math
import random
from fractions import Fraction

import pytest

from nmforge.errors import ChainNotRefining, DimensionMismatch, NotAPartition, ValidationError
from nmforge.fiber import lp
from nmforge.measure import build_chain, make_space
from nmforge.module_core import (
    INF,
    TRIVIAL_IDEAL,
    SectionModule,
    StrongBundle,
    conjugate,
    fiberize,
    glue,
    lp_module_norm,
    parse_exponent,
    pointwise_norm,
    restrict,
)

from conftest import fr


@pytest.fixture
def M(canon):
    return canon.modules["M"]


def test_exponents():
    assert parse_exponent("3/2") == Fraction(3, 2)
    assert parse_exponent("inf") == INF
    assert conjugate(2) == 2
    assert conjugate(3) == Fraction(3, 2)
    assert conjugate(1) == INF


def test_pointwise_norm_example(M):
    v = M.named("v")
    assert pointwise_norm(v) == fr(1, 4)
    assert pointwise_norm(M.zero()) == fr(0, 0)
    assert pointwise_norm(v.multiply(fr(2, 3))) == fr(2, 12)


def test_lp_module_norms(M):
    v = M.named("v")
    assert lp_module_norm(v) == pytest.approx(math.sqrt(17 / 2), abs=1e-12)
    assert lp_module_norm(M.with_exponent(INF).element(v.values)) == 4
    assert lp_module_norm(M.zero()) == 0
    assert lp_module_norm(M.with_exponent(1).element(v.values)) == Fraction(5, 2)


def test_glue(M):
    v, w = M.named("v"), M.named("w")
    g = glue(M, [{0}, {1}], [v, w])
    assert g.values == (v.values[0], w.values[1])
    assert glue(M, [{0, 1}], [v]) == v
    with pytest.raises(NotAPartition):
        glue(M, [{0, 1}, {1}], [v, w])
    with pytest.raises(NotAPartition):
        glue(M, [{0}], [v])


def test_restrict(M):
    v = M.named("v")
    assert restrict(v, {1}).values == (fr(0, 0), fr(2, 2))


def test_congruence_mod_null_points(canon_null):
    M = canon_null.modules["M"]
    base = M.named("v").values
    moved = base[:2] + (fr(99, 99),)
    assert M.element(moved) == M.named("v")


def test_section_dimension_checked(M):
    with pytest.raises(DimensionMismatch):
        M.element([fr(1, 0), fr(1, 0, 0)])
    with pytest.raises(DimensionMismatch):
        M.element([fr(1, 0)])


def test_trivial_ideal_needs_inf():
    S = make_space(["a"], [1])
    B = StrongBundle(S, (lp("1", 1),))
    with pytest.raises(ValidationError):
        SectionModule(B, 2, TRIVIAL_IDEAL)
    assert SectionModule(B, INF, TRIVIAL_IDEAL).relevant_points() == frozenset({0})


def test_fiberize_seminorm(M, canon):
    fib = fiberize(M, canon.chains["cX"], rng=random.Random(0))
    assert all(fib.checks.values()), fib.checks
    v = M.named("v")
    assert fib.seminorm(0, v) == 1
    assert fib.seminorm(1, v) == 4
    assert fib.seminorm(0, M.zero()) == 0
    assert fib.rep_class(v) == v


def test_fiberize_decomposition_never_beats_closed_form(M, canon):
    rng = random.Random(3)
    fib = fiberize(M, canon.chains["cX"], rng=rng)
    pool = [M.random_element(rng) for _ in range(12)]
    for _ in range(5):
        v = M.random_element(rng)
        for x in (0, 1):
            assert fib.decomposition_seminorm(x, v, pool, rng=rng) == fib.seminorm(x, v)


def test_fiberize_needs_refining_chain(canon):
    M = canon.modules["M"]
    lonely = build_chain(M.base, [])
    with pytest.raises(ChainNotRefining):
        fiberize(M, lonely)


def test_fiberize_on_null_base(canon_null):
    M = canon_null.modules["M"]
    fib = fiberize(M, canon_null.chains["cX"], rng=random.Random(1))
    assert all(fib.checks.values()), fib.checks
