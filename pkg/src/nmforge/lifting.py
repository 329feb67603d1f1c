"""Liftings of finite measure spaces and the lifting of modules.

On a finite carrier every lifting is induced by a retraction ``t`` of the
carrier onto the positive-mass points: ``l(E) = t^{-1}(E n supp mu)`` and
``l(f) = f o t``. Lifted modules live over the trivial sigma-ideal, so every
point (null ones included) carries a genuine fiber ``V_{t(x)}``.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Optional, Sequence

import numpy as np

from .errors import BadRetraction, LiftingsNotCompatible, ValidationError
from .exact import close, dot, rank
from .fiber import FiberSpace, apply_matrix, lp, operator_norm
from .measure import FiniteMeasureSpace, MeasurableMap
from .module_core import (
    INF,
    MEASURE_IDEAL,
    TRIVIAL_IDEAL,
    ModuleElement,
    SectionModule,
    StrongBundle,
    pointwise_norm,
)

EXHAUSTIVE_LIMIT = 12


@dataclass(frozen=True)
class Lifting:
    space: FiniteMeasureSpace
    retraction: tuple[int, ...]

    def __post_init__(self):
        sp = self.space
        if len(self.retraction) != len(sp):
            raise BadRetraction("retraction must be defined on every point")
        for x, tx in enumerate(self.retraction):
            if not 0 <= tx < len(sp):
                raise BadRetraction(f"retraction sends {sp.points[x]!r} outside the carrier")
            if sp.is_positive(x) and tx != x:
                raise BadRetraction(f"retraction moves the positive-mass point {sp.points[x]!r}")
            if not sp.is_positive(tx):
                raise BadRetraction(
                    f"retraction sends {sp.points[x]!r} to the null point {sp.points[tx]!r}"
                )

    def __call__(self, subset: Iterable[int]) -> frozenset[int]:
        """``l(E) = t^{-1}(E n supp)``."""
        s = set(subset) & self.space.support
        return frozenset(x for x, tx in enumerate(self.retraction) if tx in s)

    def lift_function(self, f: Sequence):
        """``l(f) = f o t``, which ignores the values of ``f`` on null points."""
        return tuple(f[tx] for tx in self.retraction)

    def masks(self) -> np.ndarray:
        """``l`` as an array over subset bitmasks."""
        n = len(self.space)
        m = np.arange(1 << n, dtype=np.int64)
        out = np.zeros_like(m)
        for x, tx in enumerate(self.retraction):
            out |= ((m >> tx) & 1) << x
        return out


def make_lifting(space: FiniteMeasureSpace, retraction: Mapping | Sequence | None = None,
                 check: bool = True, rng: Optional[random.Random] = None) -> Lifting:
    """Build the lifting induced by ``retraction`` and verify the lifting axioms.

    ``retraction`` maps null points to positive-mass points, by label or by
    index; positive-mass points are fixed. When omitted, every null point goes
    to the first positive-mass point.
    """
    first = min(space.support)
    t = list(range(len(space)))
    for x in space.null_points:
        t[x] = first
    if retraction is not None:
        items = retraction.items() if isinstance(retraction, Mapping) else enumerate(retraction)
        for k, v in items:
            k = space.index(k) if isinstance(k, str) else k
            v = space.index(v) if isinstance(v, str) else v
            if not 0 <= k < len(space):
                raise BadRetraction(f"retraction mentions an unknown point {k!r}")
            t[k] = v
    ell = Lifting(space, tuple(t))
    if check:
        bad = lifting_axioms(ell, rng)
        failed = [k for k, ok in bad.items() if not ok]
        if failed:
            raise BadRetraction(f"lifting axioms fail: {failed}")
    return ell


def lifting_axioms(ell: Lifting, rng: Optional[random.Random] = None, pairs: int = 2000) -> dict:
    """The six pre-lifting axioms, exhaustively over the subset lattice when small."""
    sp = ell.space
    n = len(sp)
    supp = sum(1 << x for x in sp.support)
    full = (1 << n) - 1
    if n <= EXHAUSTIVE_LIMIT:
        L = ell.masks()
        a = np.arange(1 << n, dtype=np.int64)
        A, B = a[:, None], a[None, :]
        LA, LB = L[:, None], L[None, :]
        same_class = ((A ^ B) & supp) == 0
        return {
            "empty": bool(L[0] == 0),
            "whole": bool(L[full] == full),
            "union": bool(np.all(L[A | B] == (LA | LB))),
            "intersection": bool(np.all(L[A & B] == (LA & LB))),
            "null_invariance": bool(np.all(~same_class | (LA == LB))),
            "ae_equal": bool(np.all(((a ^ L) & supp) == 0)),
        }
    rng = rng or random.Random(0)

    def lift(m):
        return sum(1 << x for x, tx in enumerate(ell.retraction) if (m >> tx) & 1)

    res = {"empty": lift(0) == 0, "whole": lift(full) == full,
           "union": True, "intersection": True, "null_invariance": True, "ae_equal": True}
    for _ in range(pairs):
        e, f = rng.getrandbits(n), rng.getrandbits(n)
        res["union"] &= lift(e | f) == lift(e) | lift(f)
        res["intersection"] &= lift(e & f) == lift(e) & lift(f)
        g = (e & supp) | (f & ~supp & full)
        res["null_invariance"] &= lift(g) == lift(e)
        res["ae_equal"] &= ((e ^ lift(e)) & supp) == 0
    return res


def function_lifting_laws(ell: Lifting, rng: random.Random, samples: int = 16) -> dict:
    """Sup norm, quotient, product, modulus, monotonicity and indicators."""
    sp = ell.space
    n = len(sp)
    ok = dict.fromkeys(["sup_norm", "quotient", "product", "modulus", "monotone", "indicator"], True)

    def rnd():
        return tuple(Fraction(rng.randint(-8, 8), rng.randint(1, 4)) for _ in range(n))

    for _ in range(samples):
        f, g = rnd(), rnd()
        lf, lg = ell.lift_function(f), ell.lift_function(g)
        ok["sup_norm"] &= max(abs(c) for c in lf) == max(abs(f[x]) for x in sp.support)
        ok["quotient"] &= sp.ae_equal(lf, f)
        ok["product"] &= ell.lift_function([a * b for a, b in zip(f, g)]) == tuple(a * b for a, b in zip(lf, lg))
        ok["modulus"] &= ell.lift_function([abs(a) for a in f]) == tuple(abs(a) for a in lf)
        h = tuple(max(a, b) for a, b in zip(f, g))
        ok["monotone"] &= all(a <= b for a, b in zip(lf, ell.lift_function(h)))
        e = frozenset(x for x in range(n) if rng.random() < 0.5)
        ok["indicator"] &= ell.lift_function(sp.indicator(e)) == sp.indicator(ell(e))
    return ok


# -- atoms ---------------------------------------------------------------------------

def lifted_atoms(ell: Lifting) -> list[frozenset[int]]:
    """``A_i = l({a_i})`` for the positive-mass points ``a_i`` in index order."""
    return [ell([a]) for a in sorted(ell.space.support)]


def atom_checks(ell: Lifting, rng: Optional[random.Random] = None, samples: int = 16) -> dict:
    """Atoms partition the carrier, each lifted set is a union of atoms, lifted functions are constant on atoms."""
    sp = ell.space
    n = len(sp)
    atoms = lifted_atoms(ell)
    cover = set().union(*atoms) == set(range(n)) and sum(len(a) for a in atoms) == n
    masks = [sum(1 << x for x in a) for a in atoms]
    if n <= EXHAUSTIVE_LIMIT:
        L = ell.masks()
        dich = all(bool(np.all(((L & m) == m) | ((L & m) == 0))) for m in masks)
    else:
        rng = rng or random.Random(0)
        dich = True
        for _ in range(2000):
            e = frozenset(x for x in range(n) if rng.random() < 0.5)
            le = ell(e)
            dich &= all(a <= le or not (a & le) for a in atoms)
    rng = rng or random.Random(0)
    const = True
    for _ in range(samples):
        f = tuple(Fraction(rng.randint(-8, 8)) for _ in range(n))
        lf = ell.lift_function(f)
        const &= all(len({lf[x] for x in a}) == 1 for a in atoms)
    return {"atoms_partition": cover, "dichotomy": dich, "constant_on_atoms": const}


# -- compatibility -------------------------------------------------------------------

def compatible_lifting(phi: MeasurableMap, ell_x: Lifting) -> Lifting:
    """A lifting of the source with ``l_Y(phi^{-1} E) = phi^{-1}(l_X E)``.

    Each null ``y`` goes to the smallest-index positive-mass point of
    ``phi^{-1}(t_X(phi(y)))``.
    """
    phi.require_measure_preserving()
    if ell_x.space != phi.target:
        raise ValidationError("lifting does not live on the map's target")
    Y = phi.source
    t = []
    for y, x in enumerate(phi.assignment):
        if Y.is_positive(y):
            t.append(y)
            continue
        target = ell_x.retraction[x]
        cands = sorted(z for z in phi.fiber(target) if Y.is_positive(z))
        # nonempty: mu_Y(phi^{-1}(x')) = mu_X(x') > 0 for the positive point x'
        t.append(cands[0])
    return make_lifting(Y, tuple(t), check=False)


def are_compatible(phi: MeasurableMap, ell_x: Lifting, ell_y: Lifting) -> bool:
    return all(
        phi(ell_y.retraction[y]) == ell_x.retraction[phi(y)] for y in range(len(phi.source))
    )


def compatibility_checks(phi: MeasurableMap, ell_x: Lifting, ell_y: Lifting,
                         rng: Optional[random.Random] = None, samples: int = 16) -> dict:
    X = phi.target
    n = len(X)
    rng = rng or random.Random(0)
    if n <= EXHAUSTIVE_LIMIT:
        subsets = [frozenset(x for x in range(n) if (m >> x) & 1) for m in range(1 << n)]
    else:
        subsets = [frozenset(x for x in range(n) if rng.random() < 0.5) for _ in range(2000)]
    sets_ok = all(ell_y(phi.preimage(e)) == phi.preimage(ell_x(e)) for e in subsets)
    fcs_ok = True
    for _ in range(samples):
        f = tuple(Fraction(rng.randint(-8, 8), rng.randint(1, 3)) for _ in range(n))
        fcs_ok &= ell_y.lift_function(phi.compose_function(f)) == phi.compose_function(ell_x.lift_function(f))
    return {"sets": sets_ok, "functions": fcs_ok}


# -- lifted modules ----------------------------------------------------------------

@dataclass(frozen=True)
class LiftedModule:
    """``lM`` over the trivial ideal with fibers ``V_{t(x)}`` and the map ``l``."""

    lifting: Lifting
    source: SectionModule
    module: SectionModule

    def lift(self, v: ModuleElement) -> ModuleElement:
        return self.module.element([v.values[tx] for tx in self.lifting.retraction])

    def quotient(self) -> SectionModule:
        """``Pi_mu(lM)``: the same sections modulo null sets."""
        return SectionModule(self.module.bundle, INF, MEASURE_IDEAL)

    def project(self, V: ModuleElement) -> ModuleElement:
        return self.quotient().element(V.values)


def lift_module(ell: Lifting, M: SectionModule) -> LiftedModule:
    if M.base != ell.space:
        raise ValidationError("module and lifting live on different spaces")
    fibers = tuple(M.fibers[tx] for tx in ell.retraction)
    tests = tuple(tuple(s[tx] for tx in ell.retraction) for s in M.bundle.test_sections)
    bundle = StrongBundle(ell.space, fibers, tests, M.bundle.names)
    return LiftedModule(ell, M, SectionModule(bundle, INF, TRIVIAL_IDEAL))


def quotient_module(lm: LiftedModule) -> SectionModule:
    return lm.quotient()


def lifted_module_checks(lm: LiftedModule, rng: random.Random, samples: int = 8) -> dict:
    M, ell = lm.source, lm.lifting
    sp = ell.space
    probes = [e for (_, _, e) in M.basis()] + [M.random_element(rng) for _ in range(samples)]
    norm_ok = all(
        all(close(a, b) for a, b in zip(pointwise_norm(lm.lift(v)), ell.lift_function(pointwise_norm(v))))
        for v in probes
    )
    prod_ok = True
    for v in probes[-samples:]:
        f = tuple(Fraction(rng.randint(-4, 4), rng.randint(1, 3)) for _ in range(len(sp)))
        prod_ok &= lm.lift(v.multiply(f)) == lm.lift(v).multiply(ell.lift_function(f))
    # generation: 1_{x} l(e_i 1_{t(x)}) span every section over the trivial ideal
    gens = []
    for x, tx in enumerate(ell.retraction):
        for e in M.fibers[tx].basis():
            gens.append(lm.lift(M.localized(tx, e)).multiply(sp.indicator([x])))
    flat = [[c for v in g.values for c in v] for g in gens]
    gen_ok = rank(flat) == lm.module.dimension()
    Q = lm.quotient()
    round_trip = all(
        all(lm.project(lm.lift(v)).values[x] == v.values[x] for x in sp.support) for v in probes
    )
    iso_norm = all(
        all(close(a, b) for a, b in zip(pointwise_norm(lm.project(lm.lift(v))), pointwise_norm(v)))
        for v in probes
    )
    iso_dim = Q.dimension() == M.dimension()
    return {
        "norm_identity": norm_ok,
        "product_rule": prod_ok,
        "generation": gen_ok,
        "quotient_round_trip": round_trip and iso_norm and iso_dim,
    }


# -- morphisms -----------------------------------------------------------------------

@dataclass(frozen=True)
class Morphism:
    """An ``L^inf``-linear map between section modules, one matrix per point."""

    source: SectionModule
    target: SectionModule
    matrices: tuple

    def __call__(self, v: ModuleElement) -> ModuleElement:
        return self.target.element(
            [apply_matrix(a, val) for a, val in zip(self.matrices, v.values)]
        )

    def pointwise_norm(self):
        rel = self.source.relevant_points()
        return tuple(
            operator_norm(a, s, t) if x in rel else Fraction(0)
            for x, (a, s, t) in enumerate(zip(self.matrices, self.source.fibers, self.target.fibers))
        )


def morphism_from_callable(source: SectionModule, target: SectionModule,
                           T: Callable[[ModuleElement], ModuleElement]) -> Morphism:
    mats = []
    for x, f in enumerate(source.fibers):
        cols = [T(source.localized(x, e)).values[x] for e in f.basis()]
        mats.append(tuple(tuple(cols[j][i] for j in range(f.dim)) for i in range(target.fibers[x].dim)))
    return Morphism(source, target, tuple(mats))


def multiplication_morphism(M: SectionModule, f: Sequence) -> Morphism:
    mats = tuple(
        tuple(tuple(f[x] if i == j else Fraction(0) for j in range(fib.dim)) for i in range(fib.dim))
        for x, fib in enumerate(M.fibers)
    )
    return Morphism(M, M, mats)


def lift_morphism(ell: Lifting, T: Morphism) -> tuple[Morphism, LiftedModule, LiftedModule]:
    """``lT`` with ``lT(l v) = l(T v)``; per point it is ``T``'s matrix at ``t(y)``."""
    lm_s = lift_module(ell, T.source)
    lm_t = lift_module(ell, T.target)
    mats = tuple(T.matrices[tx] for tx in ell.retraction)
    return Morphism(lm_s.module, lm_t.module, mats), lm_s, lm_t


def lifted_morphism_checks(ell: Lifting, T: Morphism, rng: random.Random, samples: int = 8) -> dict:
    lT, lm_s, lm_t = lift_morphism(ell, T)
    probes = [e for (_, _, e) in T.source.basis()] + [T.source.random_element(rng) for _ in range(samples)]
    square = all(lT(lm_s.lift(v)) == lm_t.lift(T(v)) for v in probes)
    lhs, rhs = lT.pointwise_norm(), ell.lift_function(T.pointwise_norm())
    return {"commuting_square": square, "norm_identity": all(close(a, b) for a, b in zip(lhs, rhs))}


# -- pullback square --------------------------------------------------------------------

def pullback_commutes(phi: MeasurableMap, ell_x: Lifting, ell_y: Lifting, M: SectionModule,
                      rng: Optional[random.Random] = None, samples: int = 16) -> dict:
    """Compare ``l_Y(phi*v)`` with ``phi*(l_X v)`` on generators and samples.

    The first path lifts the realized pullback; the second pulls back the
    lifted module, realized as sections of ``y -> V_{t_X(phi(y))}`` over the
    trivial ideal.
    """
    from .pullback import pullback_module

    if not are_compatible(phi, ell_x, ell_y):
        raise LiftingsNotCompatible("phi o t_Y differs from t_X o phi")
    rng = rng or random.Random(0)
    pb = pullback_module(phi, M, rng=rng)
    lifted_pb = lift_module(ell_y, pb.module)
    lx = lift_module(ell_x, M)
    pb_lifted = pullback_module(phi, lx.module, rng=rng)
    probes = [e for (_, _, e) in M.basis()] + [M.random_element(rng) for _ in range(samples)]
    fibers_ok = lifted_pb.module.fibers == pb_lifted.module.fibers
    paths_ok = all(
        lifted_pb.lift(pb.pull(v)).values == pb_lifted.pull(lx.lift(v)).values for v in probes
    )
    norms_ok = all(
        pointwise_norm(pb_lifted.pull(lx.lift(v)))
        == phi.compose_function(ell_x.lift_function(pointwise_norm(v)))
        for v in probes
    )
    return {"fibers_agree": fibers_ok, "paths_agree": paths_ok,
            "pullback_of_lift_norm": norms_ok, "probes": len(probes)}


# -- duals through liftings ----------------------------------------------------------------

def dual_via_lifting_checks(ell: Lifting, M: SectionModule, rng: random.Random, samples: int = 6) -> dict:
    """``omega -> (v -> <omega, l(v)>)`` realizes ``M*`` and matches the direct dual."""
    from .duality import dual_module, ess_sup_norm

    Minf = M.with_exponent(INF)
    D = dual_module(Minf, mode="linf")
    lm = lift_module(ell, Minf)
    lD = lift_module(ell, D.module)
    agree = True
    norms = True
    for eta in [D.random_element(rng) for _ in range(samples)] + [e for (_, _, e) in D.module.basis()]:
        omega = lD.lift(eta)

        def via_lift(v, omega=omega):
            lv = lm.lift(v)
            return tuple(dot(a, b) for a, b in zip(omega.values, lv.values))

        direct = D.functional(eta)
        for v in [e for (_, _, e) in Minf.basis()] + [Minf.random_element(rng)]:
            agree &= Minf.base.canonical(via_lift(v)) == direct(v)
        s = ess_sup_norm(via_lift, Minf, rng, omega=eta, extra=8)
        pn = pointwise_norm(eta)
        norms &= all(close(s[x], pn[x]) for x in Minf.relevant_points())
    images = [
        [c for (_, _, e) in Minf.basis() for c in Minf.base.canonical(
            tuple(dot(a, b) for a, b in zip(lD.lift(w).values, lm.lift(e).values)))]
        for (_, _, w) in D.module.basis()
    ]
    bij = rank(images) == len(images) == Minf.dimension() if images else True
    return {"agrees_with_direct": agree, "pointwise_norm_preserved": norms, "bijective": bij}


def scalar_fiber_checks(ell: Lifting, rng: random.Random, samples: int = 8) -> dict:
    """The lifted scalar module has one-dimensional fibers read by ``f -> l(f)(x)``."""
    sp = ell.space
    R = SectionModule(StrongBundle(sp, (lp("inf", 1),) * len(sp)), INF)
    lm = lift_module(ell, R)
    dims = all(f.dim == 1 for f in lm.module.fibers)
    ok = True
    for _ in range(samples):
        f = tuple(Fraction(rng.randint(-8, 8), rng.randint(1, 3)) for _ in range(len(sp)))
        lv = lm.lift(R.element([(c,) for c in f]))
        ok &= tuple(v[0] for v in lv.values) == ell.lift_function(sp.canonical(f))
        ok &= pointwise_norm(lv) == tuple(abs(c) for c in ell.lift_function(f))
    return {"one_dimensional": dims, "evaluation_isomorphism": ok}
