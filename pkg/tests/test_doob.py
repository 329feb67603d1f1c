from __future__ import annotations

import math
from fractions import Fraction

import pytest

from nmforge import doob
from nmforge.errors import ChainNotRefining, LevelOutOfRange, NegativeInput
from nmforge.measure import build_chain, make_space

from conftest import fr


@pytest.fixture
def cX():
    return build_chain(make_space(["a", "b"], ["1/2", "1/2"]), [["a"]])


def test_cond_exp_examples(cX):
    assert doob.cond_exp(cX, 0, fr(1, 3)) == fr(2, 2)
    assert doob.cond_exp(cX, 1, fr(1, 3)) == fr(1, 3)
    for k in range(2):
        assert doob.cond_exp(cX, k, fr(5, 5)) == fr(5, 5)


def test_cond_exp_level_range(cX):
    with pytest.raises(LevelOutOfRange):
        doob.cond_exp(cX, 2, fr(1, 3))
    with pytest.raises(LevelOutOfRange):
        doob.cond_exp(cX, -1, fr(1, 3))


def test_cond_exp_zero_on_null_cells():
    S = make_space(["a", "b", "c"], ["1/2", "1/2", 0])
    ch = build_chain(S, [["c"], ["a"]])
    assert doob.cond_exp(ch, 1, fr(4, 8, 100)) == fr(6, 6, 0)


def test_cond_exp_float_entries(cX):
    assert doob.cond_exp(cX, 0, (1.0, 3.0)) == pytest.approx((2.0, 2.0))


def test_rep_example(cX):
    res = doob.rep(cX, fr(1, 3))
    assert res.rep == fr(1, 3)
    assert res.leb_set == frozenset({0, 1})
    assert res.stabilization_level == 1


def test_rep_zero(cX):
    res = doob.rep(cX, fr(0, 0))
    assert res.rep == fr(0, 0)
    assert res.leb_set == frozenset({0, 1})
    assert res.stabilization_level == 0


def test_rep_ignores_null_values():
    S = make_space(["a", "b", "c"], ["1/2", "1/2", 0])
    ch = build_chain(S, [["a"], ["b"]])
    f, g = fr(1, 3, 0), fr(1, 3, 42)
    rf, rg = doob.rep(ch, f), doob.rep(ch, g)
    assert all(rf.rep[x] == rg.rep[x] for x in S.support)


def test_rep_needs_refining_chain():
    S = make_space(["y1", "y2", "y3"], ["1/4", "1/4", "1/2"])
    with pytest.raises(ChainNotRefining):
        doob.rep(build_chain(S, [["y1"]]), fr(1, 2, 3))


def test_rep_p_examples(cX):
    proxy = doob.level_proxy_p(cX, 0, 2, fr(1, 3))
    assert proxy[0] == pytest.approx(math.sqrt(5), abs=1e-12)
    assert proxy[1] == pytest.approx(2.2360679, abs=1e-7)
    assert doob.rep_p(cX, 2, fr(1, 3)).rep == fr(1, 3)
    for p in (Fraction(3, 2), 2, 3, 7):
        assert doob.rep_p(cX, p, fr(1, 1)).rep == fr(1, 1)


def test_rep_p_exact_roots_stay_rational(cX):
    res = doob.rep_p(cX, 2, fr(3, 4))
    assert all(isinstance(v, Fraction) for v in res.rep)
    # a rational mean square with a rational root at level 0
    assert doob.level_proxy_p(cX, 0, 2, fr(1, 7)) == fr(5, 5)


def test_rep_p_rejects_negative(cX):
    with pytest.raises(NegativeInput):
        doob.rep_p(cX, 2, fr(-1, 3))


def test_l1_norm(cX):
    assert doob.l1_norm(cX, fr(1, -3)) == 2
    assert doob.l1_norm(cX.space, fr(1, -3)) == 2
