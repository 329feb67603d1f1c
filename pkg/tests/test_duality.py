from __future__ import annotations

import random

import pytest

from nmforge.duality import (
    lp_linf_dual_check,
    dual_module,
    dual_of_pullback,
    embed_pullback_dual,
    ess_sup_norm,
    functional_to_section,
    homloc_inverse,
    homloc_iso,
    iso_sections_to_dual,
    verify_section_duality,
    verify_homloc,
)
from nmforge.errors import BadExponents, FiberMismatch
from nmforge.fiber import lp
from nmforge.lifting import compatible_lifting
from nmforge.measure import make_space
from nmforge.module_core import INF, SectionModule, StrongBundle, pointwise_norm
from nmforge.pullback import pullback_module

from conftest import fr


@pytest.fixture
def pb(canon):
    return pullback_module(canon.maps["phi"], canon.modules["M"], rng=random.Random(0))


def test_dual_fibers_and_exponent(canon):
    D = dual_module(canon.modules["M"])
    assert D.q == 2
    assert all(f == lp("inf", 2) for f in D.module.fibers)


def test_one_point_base_is_dual_space():
    S = make_space(["*"], [1])
    M = SectionModule(StrongBundle(S, (lp("1", 3),)), 3)
    D = dual_module(M)
    assert D.module.fibers == (lp("inf", 3),)
    assert D.q == pytest.approx(1.5)


def test_section_norm_and_pairing(canon):
    D = dual_module(canon.modules["M"])
    eta = canon.duals["eta"].element
    assert pointwise_norm(eta) == fr(1, 1)
    I = D.functional(eta)
    assert I(canon.modules["M"].named("v")) == fr(1, 4)
    assert D.functional(D.module.zero())(canon.modules["M"].named("v")) == fr(0, 0)
    assert functional_to_section(I, D) == eta


def test_sampled_norm_equals_fiber_dual_norm(canon):
    M = canon.modules["M"]
    D = dual_module(M)
    rng = random.Random(2)
    for _ in range(5):
        w = D.random_element(rng)
        assert ess_sup_norm(D.functional(w), M, rng, omega=w) == pointwise_norm(w)


def test_verify_section_duality(canon_null):
    D = dual_module(canon_null.modules["M"])
    checks = verify_section_duality(D, random.Random(1))
    assert all(checks.values()), checks


def test_bad_exponents(canon):
    M = canon.modules["M"]
    with pytest.raises(BadExponents):
        dual_module(M, q=3)
    with pytest.raises(BadExponents):
        dual_module(M.with_exponent(1))
    with pytest.raises(BadExponents):
        dual_module(M.with_exponent(INF))
    with pytest.raises(BadExponents):
        dual_module(M, mode="linf")
    assert dual_module(M.with_exponent(INF), mode="linf").q == INF


def test_fiber_mismatch(canon):
    M = canon.modules["M"]
    # elements of M itself live in l1 fibers, not their duals
    with pytest.raises(FiberMismatch):
        iso_sections_to_dual(M.named("v"), M)


def test_dual_of_pullback_example(pb, canon):
    dp = dual_of_pullback(pb, rng=random.Random(0))
    assert all(dp.checks.values()), dp.checks
    omega = dp.dual.element(canon.duals["omega"].element.values)
    L = dp.iso(omega)
    assert L(pb.pull(canon.modules["M"].named("v"))) == fr(1, 0, 4)
    assert dp.section_of(L) == omega
    assert dp.section_of(L, "separable") == omega
    assert dp.iso(dp.dual.module.zero())(pb.pull(canon.modules["M"].named("v"))) == fr(0, 0, 0)


def test_routes_agree_with_null_points(canon_null):
    phi = canon_null.maps["phi"]
    lx = canon_null.liftings["lX"]
    ly = compatible_lifting(phi, lx)
    pb = pullback_module(phi, canon_null.modules["M"], rng=random.Random(0))
    dp = dual_of_pullback(pb, rng=random.Random(5), liftings=(lx, ly))
    assert dp.checks["routes_agree"]
    w = dp.dual.random_element(random.Random(8))
    L = dp.iso(w)
    direct = dp.section_of(L)
    assert dp.section_of(L, "separable", canon_null.chains["cY"]) == direct
    assert dp.section_of(L, "lifting", liftings=(lx, ly)) == direct


def test_embedded_image(pb, canon):
    eta = canon.duals["eta"].element
    L = embed_pullback_dual(pb, eta)
    D = dual_module(pb.module)
    w = functional_to_section(L, D)
    assign = canon.maps["phi"].assignment
    assert w.values == tuple(eta.values[x] for x in assign)
    assert pointwise_norm(w) == tuple(pointwise_norm(eta)[x] for x in assign)


def test_homloc_round_trip(pb, canon):
    D = dual_module(pb.module)
    omega = D.element(canon.duals["omega"].element.values)
    H = homloc_iso(pb, D.functional(omega))
    v = canon.modules["M"].named("v")
    assert H(v) == fr(1, 0, 4)
    assert H.norm == pointwise_norm(omega)
    ext = homloc_inverse(H)
    assert ext(pb.pull(v)) == fr(1, 0, 4)


def test_homloc_zero(pb):
    D = dual_module(pb.module)
    H = homloc_iso(pb, D.functional(D.module.zero()))
    assert H.norm == fr(0, 0, 0)


def test_verify_homloc(canon_null):
    pb = pullback_module(canon_null.maps["phi"], canon_null.modules["M"], rng=random.Random(0))
    checks = verify_homloc(pb, random.Random(2))
    assert all(checks.values()), checks


def test_consistency_of_dual_definitions(canon):
    assert lp_linf_dual_check(canon.modules["M"], p=2)
    assert lp_linf_dual_check(canon.modules["M"], p=3)


def test_cp_on_one_point_base_scales_by_root_mass():
    from nmforge.duality import cp_restrict
    from nmforge.module_core import lp_module_norm

    S = make_space(["*"], [4])
    M = SectionModule(StrongBundle(S, (lp("1", 2),)), INF)
    e = M.element([fr(3, -1)])
    assert lp_module_norm(e) == 4
    assert lp_module_norm(cp_restrict(M, 2).element(e.values)) == 8
