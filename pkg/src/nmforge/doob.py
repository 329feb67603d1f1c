"""Conditional expectations along a partition chain and representative selection.

``cond_exp`` averages over the cells of one level; ``rep`` detects the limit of
those averages as exact stabilization over the remaining levels, which is
decidable because chains are finite.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import ChainNotRefining, LevelOutOfRange, NegativeInput
from .exact import power, root
from .measure import Function, PartitionChain


@dataclass(frozen=True)
class RepResult:
    leb_set: frozenset[int]
    rep: Function
    stabilization_level: int


def cond_exp(chain: PartitionChain, k: int, f: Sequence) -> Function:
    """Average of ``f`` over each positive-mass cell of level ``k``; 0 on null cells."""
    if not 0 <= k < len(chain.levels):
        raise LevelOutOfRange(f"level {k} not in [0, {len(chain.levels)})")
    space = chain.space
    out = [Fraction(0)] * len(space)
    try:
        return _cond_exp_int(chain, k, f, out)
    except AttributeError:  # float entries
        pass
    for cell in chain.levels[k]:
        m = space.mass(cell)
        if m == 0:
            continue
        avg = sum((f[i] * space.weights[i] for i in cell), Fraction(0)) / m
        for i in cell:
            out[i] = avg
    return tuple(out)


def _cond_exp_int(chain: PartitionChain, k: int, f: Sequence, out: list) -> Function:
    for idx, ws, m in chain.integer_cells[1][k]:
        num, den = 0, 1
        for i, w in zip(idx, ws):
            v = f[i]
            vd = v.denominator
            if vd == den:
                num += v.numerator * w
            else:
                num = num * vd + v.numerator * w * den
                den *= vd
        avg = Fraction(num, den * m)
        for i in idx:
            out[i] = avg
    return tuple(out)


def martingale(chain: PartitionChain, f: Sequence) -> list[Function]:
    return [cond_exp(chain, k, f) for k in range(len(chain.levels))]


def _require_refining(chain: PartitionChain):
    if not chain.fully_refining:
        raise ChainNotRefining(
            "the final level leaves positive-mass points unseparated"
        )


def rep(chain: PartitionChain, f: Sequence) -> RepResult:
    """Pointwise limit of the martingale ``P_k(f)``, zero off the convergence set."""
    _require_refining(chain)
    seq = martingale(chain, f)
    last = seq[-1]
    n = len(chain.space)
    # Every point's sequence is constant from the last level on, null points
    # included, so the convergence set is the whole carrier.
    leb = frozenset(range(n))
    value = tuple(last)
    k = len(seq) - 1
    while k > 0 and seq[k - 1] == last:
        k -= 1
    return RepResult(leb, value, k)


def rep_of_power(chain: PartitionChain, p, f_pow: Sequence) -> RepResult:
    """``Rep_p`` given the already-raised function ``f ** p``."""
    inner = rep(chain, f_pow)
    value = tuple(root(v, Fraction(p)) for v in inner.rep)
    return RepResult(inner.leb_set, value, inner.stabilization_level)


def rep_p(chain: PartitionChain, p, f: Sequence) -> RepResult:
    """``Rep(f**p) ** (1/p)`` on ``Leb(f**p)``.

    The root is exact when rational and binary64 otherwise.
    """
    p = Fraction(p)
    if p <= 1:
        raise ValueError("rep_p needs an exponent p > 1")
    if any(v < 0 for v in f):
        raise NegativeInput("rep_p is defined for nonnegative functions")
    _require_refining(chain)
    return rep_of_power(chain, p, [power(v, p) for v in f])


def level_proxy_p(chain: PartitionChain, k: int, p, f: Sequence) -> Function:
    """``P_k(f**p) ** (1/p)``, the finite-level approximant of ``Rep_p``."""
    p = Fraction(p)
    return tuple(root(v, p) for v in cond_exp(chain, k, [power(x, p) for x in f]))


def l1_norm(chain_or_space, f: Sequence):
    space = getattr(chain_or_space, "space", chain_or_space)
    return space.integrate([abs(v) for v in f])
