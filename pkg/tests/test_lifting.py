from __future__ import annotations

import random
import time

import pytest

from nmforge.errors import BadRetraction, LiftingsNotCompatible
from nmforge.lifting import (
    are_compatible,
    atom_checks,
    compatibility_checks,
    compatible_lifting,
    lift_module,
    lift_morphism,
    lifted_atoms,
    lifted_module_checks,
    lifted_morphism_checks,
    lifting_axioms,
    make_lifting,
    multiplication_morphism,
    pullback_commutes,
)
from nmforge.measure import identity_map, make_space
from nmforge.module_core import pointwise_norm

from conftest import fr


@pytest.fixture
def ell(canon_null):
    return canon_null.liftings["lX"]


def test_set_lifting_example(ell):
    X = ell.space
    a, b, c = (X.index(p) for p in "abc")
    assert ell({a}) == {a, c}
    assert ell({c}) == frozenset()
    assert ell({b}) == {b}


def test_no_null_points_is_identity(canon):
    ell = canon.liftings["lX"]
    for m in range(4):
        E = {x for x in range(2) if m >> x & 1}
        assert ell(E) == E


def test_bad_retraction():
    S = make_space(["a", "b", "c"], ["1/2", "1/2", 0])
    with pytest.raises(BadRetraction):
        make_lifting(S, {"c": "c"})
    with pytest.raises(BadRetraction):
        make_lifting(S, {"a": "b"})


def test_axioms_hold(ell):
    assert all(lifting_axioms(ell).values())


def test_atoms(ell, canon_null):
    X = ell.space
    atoms = [set(X.labels(A)) for A in lifted_atoms(ell)]
    assert sorted(map(sorted, atoms)) == [["a", "c"], ["b"]]
    assert all(atom_checks(ell, random.Random(0)).values())
    f = canon_null.functions["f"]
    lf = ell.lift_function(f)
    assert lf[X.index("a")] == lf[X.index("c")] == 1


def test_atoms_singletons_without_nulls(canon):
    assert lifted_atoms(canon.liftings["lX"]) == [frozenset({0}), frozenset({1})]


def test_compatible_lifting_smallest_index(canon_null, ell):
    phi = canon_null.maps["phi"]
    ly = compatible_lifting(phi, ell)
    Y = phi.source
    assert ly.retraction[Y.index("y4")] == Y.index("y1")
    assert are_compatible(phi, ell, ly)
    assert all(compatibility_checks(phi, ell, ly).values())


def test_compatible_lifting_along_identity(ell):
    assert compatible_lifting(identity_map(ell.space), ell).retraction == ell.retraction


def test_lifted_module(canon_null, ell):
    M = canon_null.modules["M"]
    lm = lift_module(ell, M)
    v = M.named("v")
    lv = lm.lift(v)
    assert pointwise_norm(lv) == ell.lift_function(pointwise_norm(v))
    assert all(lifted_module_checks(lm, random.Random(0)).values())


def test_lifted_morphisms(canon_null, ell):
    M = canon_null.modules["M"]
    zero = multiplication_morphism(M, fr(0, 0, 0))
    lT, _, lm = lift_morphism(ell, zero)
    assert lT(lm.lift(M.named("v"))).is_zero()
    ident = multiplication_morphism(M, fr(1, 1, 1))
    lI, _, _ = lift_morphism(ell, ident)
    assert lI.pointwise_norm() == fr(1, 1, 1)
    T = multiplication_morphism(M, canon_null.functions["f"])
    assert all(lifted_morphism_checks(ell, T, random.Random(0)).values())
    lT, _, _ = lift_morphism(ell, T)
    assert lT.pointwise_norm() == ell.lift_function(T.pointwise_norm())


def test_pullback_square(canon_null, ell):
    phi = canon_null.maps["phi"]
    ly = compatible_lifting(phi, ell)
    res = pullback_commutes(phi, ell, ly, canon_null.modules["M"], random.Random(0))
    assert res.pop("probes") >= 16
    assert all(res.values()), res


def test_pullback_square_needs_compatible_liftings(canon_null, ell):
    phi = canon_null.maps["phi"]
    Y = phi.source
    # send y4 (over a) to y3 (over b)
    bad = make_lifting(Y, {"y4": "y3"})
    with pytest.raises(LiftingsNotCompatible):
        pullback_commutes(phi, ell, bad, canon_null.modules["M"])


def test_exhaustive_axioms_on_twelve_points():
    labels = [f"p{i}" for i in range(12)]
    weights = ["1/8"] * 8 + [0] * 4
    S = make_space(labels, weights)
    ell = make_lifting(S, {"p8": "p0", "p9": "p0", "p10": "p3", "p11": "p7"}, check=False)
    t = time.perf_counter()
    res = lifting_axioms(ell)
    assert all(res.values()), res
    assert time.perf_counter() - t < 30
