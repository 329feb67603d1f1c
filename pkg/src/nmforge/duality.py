"""Module duals realized as sections of dual fibers.

A functional on a section module is any callable taking an element to a
function on the base. Locality is what makes the fiberwise picture lossless:
the section ``omega`` of a functional ``L`` is read off by probing
indicator-localized basis sections, ``omega(x)_i = L(e_i 1_{x})(x)``.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

from .doob import rep
from .errors import BadExponents, FiberMismatch, ValidationError
from .exact import close, dot, leq, rank
from .fiber import dual_fiber
from .measure import FiniteMeasureSpace, PartitionChain, build_chain
from .module_core import (
    INF,
    ModuleElement,
    SectionModule,
    StrongBundle,
    conjugate,
    lp_module_norm,
    parse_exponent,
    pointwise_norm,
)
from .pullback import LocalOperatorExtension, PullbackModule, extend_local_operator

ESS_SUP_RANDOM = 64


@dataclass(frozen=True)
class WeakBundle:
    """Dual fibers over a base, tested against sections of the predual fibers."""

    base: FiniteMeasureSpace
    fibers: tuple
    test_vectors: tuple = ()

    def as_bundle(self) -> StrongBundle:
        # at finite dimension weak and strong measurability coincide
        return StrongBundle(self.base, self.fibers)


def weak_bundle_of(M: SectionModule) -> WeakBundle:
    return WeakBundle(M.base, tuple(dual_fiber(f) for f in M.fibers), M.bundle.test_sections)


@dataclass(frozen=True)
class ModuleFunctional:
    """An ``L^inf``-linear map from ``domain`` to functions on its base."""

    domain: SectionModule
    fn: Callable[[ModuleElement], Sequence]

    def __call__(self, v: ModuleElement):
        vals = self.fn(v)
        rel = self.domain.relevant_points()
        return tuple(vals[x] if x in rel else Fraction(0) for x in range(len(self.domain.base)))

    def agrees_with(self, other: "ModuleFunctional") -> bool:
        return all(self(e) == other(e) for (_, _, e) in self.domain.basis())


@dataclass(frozen=True)
class DualModule:
    """``M*`` realized as sections of the dual fibers of ``M``.

    ``mode`` is ``"lp"`` (dual exponent ``q``, values classed in ``L^1``) or
    ``"linf"`` (elements with bounded pointwise norm, values in ``L^inf``).
    """

    predual: SectionModule
    module: SectionModule
    mode: str = "lp"

    @property
    def q(self):
        return self.module.p

    def element(self, values) -> ModuleElement:
        return self.module.element(values)

    def functional(self, omega: ModuleElement) -> ModuleFunctional:
        return iso_sections_to_dual(omega, self.predual)

    def section_of(self, L: Callable) -> ModuleElement:
        return functional_to_section(L, self)

    def random_element(self, rng: random.Random) -> ModuleElement:
        return self.module.random_element(rng)


def dual_module(M: SectionModule, p=None, q=None, mode: str = "lp") -> DualModule:
    """The dual of ``M`` with exponent ``q = p / (p - 1)`` (or ``inf`` in ``linf`` mode).

    Raises
    ------
    BadExponents
        If ``p`` is outside ``(1, inf)`` in ``lp`` mode, or ``1/p + 1/q != 1``.
    """
    p = M.p if p is None else parse_exponent(p)
    if mode == "lp":
        if p == INF or p <= 1:
            raise BadExponents(f"the L^p dual needs p in (1, inf), got {p}")
        qq = conjugate(p)
        if q is not None and parse_exponent(q) != qq:
            raise BadExponents(f"1/{p} + 1/{q} != 1")
    elif mode == "linf":
        if p != INF:
            raise BadExponents("the L-infinity dual is taken of an L-infinity normed module")
        qq = INF
    else:
        raise ValidationError(f"unknown dual mode {mode!r}")
    wb = weak_bundle_of(M)
    return DualModule(M, SectionModule(wb.as_bundle(), qq, M.ideal), mode)


def iso_sections_to_dual(omega: ModuleElement, M: SectionModule) -> ModuleFunctional:
    """``I(omega)(v) = <omega(.), v(.)>``."""
    if len(omega.values) != len(M.base) or any(
        omega.module.fibers[x] != dual_fiber(f) for x, f in enumerate(M.fibers)
    ):
        raise FiberMismatch("section does not take values in the dual fibers of the module")
    w = omega.values
    return ModuleFunctional(M, lambda v: tuple(dot(a, b) for a, b in zip(w, v.values)))


def functional_to_section(L: Callable, D: DualModule) -> ModuleElement:
    """Inverse of ``I``: ``omega(x)_i = L(e_i 1_{x})(x)``."""
    M = D.predual
    vals = [f.zero() for f in D.module.fibers]
    for (x, i, e) in M.basis():
        v = list(vals[x])
        v[i] = L(e)[x]
        vals[x] = tuple(v)
    return D.element(vals)


def ess_sup_norm(L: Callable, M: SectionModule, rng: Optional[random.Random] = None,
                 omega: Optional[ModuleElement] = None, extra: int = ESS_SUP_RANDOM):
    """``ess sup { |L(v)| : |v| <= 1 }`` over a deterministic pool plus random unit sections.

    The pool holds, for every relevant point ``x``, the dual-norm attainer of
    ``omega(x)`` localized at ``x``; this guarantees attainment.
    """
    rng = rng or random.Random(0)
    if omega is None:
        omega = functional_to_section(L, dual_module(M, mode="linf" if M.p == INF else "lp"))
    pool = []
    for x in sorted(M.relevant_points()):
        pool.append(M.localized(x, M.fibers[x].attainer(omega.values[x])))
    pool += [M.random_unit_element(rng) for _ in range(extra)]
    best = [Fraction(0)] * len(M.base)
    for v in pool:
        vals = L(v)
        for x in M.relevant_points():
            a = abs(vals[x])
            if a > best[x]:
                best[x] = a
    return tuple(best)


def dual_norm_bound_holds(omega: ModuleElement, v: ModuleElement) -> bool:
    """``|<omega, v>| <= |omega| |v|`` pointwise."""
    pw, pv = pointwise_norm(omega), pointwise_norm(v)
    pair = [dot(a, b) for a, b in zip(omega.values, v.values)]
    return all(leq(abs(pair[x]), pw[x] * pv[x]) for x in v.module.relevant_points())


def verify_section_duality(D: DualModule, rng: random.Random, samples: int = 6) -> dict:
    """Instance checks that ``I`` is a pointwise isometric ``L^inf``-linear bijection."""
    M = D.predual
    dual_basis = [e for (_, _, e) in D.module.basis()]
    prim_basis = [e for (_, _, e) in M.basis()]
    omegas = [D.random_element(rng) for _ in range(samples)]
    round_trip = all(functional_to_section(D.functional(w), D) == w for w in omegas + dual_basis)
    # injectivity: images of the dual basis are independent as functionals
    gram = [[c for e in prim_basis for c in D.functional(w)(e)] for w in dual_basis]
    injective = rank(gram) == len(dual_basis) if dual_basis else True
    surjective = len(dual_basis) == len(prim_basis)
    linear = True
    bound = True
    norms = True
    for w in omegas:
        I = D.functional(w)
        v = M.random_element(rng)
        f = tuple(Fraction(rng.randint(-4, 4), rng.randint(1, 3)) for _ in range(len(M.base)))
        lhs = I(v.multiply(f))
        rhs = tuple(a * b for a, b in zip(f, I(v)))
        linear &= lhs == rhs
        bound &= dual_norm_bound_holds(w, v) and dual_norm_bound_holds(w, v.multiply(f))
        sampled = ess_sup_norm(I, M, rng, omega=w, extra=16)
        pn = pointwise_norm(w)
        norms &= all(close(sampled[x], pn[x]) for x in M.relevant_points())
    return {
        "round_trip": round_trip,
        "injective": injective,
        "surjective": surjective,
        "linf_linear": linear,
        "dual_norm_bound": bound,
        "pointwise_norm_preserved": norms,
    }


# -- dual of a pullback ------------------------------------------------------------

@dataclass
class DualOfPullback:
    """``(phi*M)*`` realized as sections ``y -> omega(y)`` of ``V'_{phi(y)}``."""

    pullback: PullbackModule
    dual: DualModule
    checks: dict = field(default_factory=dict)

    def iso(self, omega: ModuleElement) -> ModuleFunctional:
        """``I(omega)(V) = <omega(y), V(y)>``, the isomorphism onto ``(phi*M)*``."""
        return self.dual.functional(omega)

    def section_of(self, L: Callable, route: str = "direct", chain: Optional[PartitionChain] = None,
                   liftings=None) -> ModuleElement:
        """Recover ``omega`` from ``L`` along one of three routes.

        ``"direct"`` probes single-point generators. ``"separable"`` probes
        pullbacks ``phi*(e_i 1_{x})`` and selects representatives along a
        chain on ``Y``. ``"lifting"`` probes ``phi*(e_i 1_{t_X phi(y)})`` at
        ``t_Y(y)`` for compatible liftings ``(l_X, l_Y)``.
        """
        pb = self.pullback
        if route == "direct":
            return functional_to_section(L, self.dual)
        Y = pb.phi.source
        M = pb.source
        fibers = self.dual.module.fibers
        if route == "separable":
            chain = chain or build_chain(Y, [[y] for y in range(len(Y))])
            cols = {}
            for x in range(len(M.base)):
                for i, e in enumerate(M.fibers[x].basis()):
                    cols[(x, i)] = rep(chain, L(pb.pull(M.localized(x, e)))).rep
            vals = [
                tuple(cols[(x, i)][y] for i in range(fibers[y].dim))
                for y, x in enumerate(pb.phi.assignment)
            ]
            return self.dual.element(vals)
        if route == "lifting":
            if liftings is None:
                raise ValidationError("the lifting route needs a pair of compatible liftings")
            lx, ly = liftings
            lifted = []
            for y, x in enumerate(pb.phi.assignment):
                tx = lx.retraction[x]
                ty = ly.retraction[y]
                lifted.append(tuple(L(pb.pull(M.localized(tx, e)))[ty] for e in M.fibers[tx].basis()))
            # the lifted section lives in V'_{t_X(phi(y))}; its class only sees positive-mass y
            return self.dual.element([
                v if Y.is_positive(y) else fibers[y].zero() for y, v in enumerate(lifted)
            ])
        raise ValidationError(f"unknown route {route!r}")


def dual_of_pullback(pb: PullbackModule, q=None, rng: Optional[random.Random] = None,
                     chain: Optional[PartitionChain] = None, liftings=None,
                     samples: int = 4) -> DualOfPullback:
    """Realize ``(phi*M)*`` and verify the isomorphism and the agreement of routes."""
    if pb.coords:
        raise ValidationError("dual of a pullback is realized on the direct pullback")
    pb.phi.require_measure_preserving()
    rng = rng or random.Random(0)
    D = dual_module(pb.module, q=q)
    res = DualOfPullback(pb, D)
    omegas = [D.random_element(rng) for _ in range(samples)] + [D.module.zero()]
    agree = True
    for w in omegas:
        L = res.iso(w)
        routes = [res.section_of(L), res.section_of(L, "separable", chain)]
        if liftings is not None:
            routes.append(res.section_of(L, "lifting", liftings=liftings))
        agree &= all(r == w for r in routes)
    res.checks.update(verify_section_duality(D, rng, samples))
    res.checks["routes_agree"] = agree
    res.checks["norm_bound_direction"] = all(
        leq(a, b)
        for w in omegas
        for a, b in zip(ess_sup_norm(res.iso(w), pb.module, rng, omega=w, extra=8), pointwise_norm(w))
    )
    return res


def embed_pullback_dual(pb: PullbackModule, eta: ModuleElement) -> ModuleFunctional:
    """``I_phi(phi*eta)``: ``V -> <eta(phi(y)), V(y)>`` for ``eta`` in ``M*``."""
    w = [eta.values[x] for x in pb.phi.assignment]
    return ModuleFunctional(
        pb.module, lambda V: tuple(dot(a, pb.value_in_source_fiber(V, y)) for y, a in enumerate(w))
    )


# -- local maps ----------------------------------------------------------------------

@dataclass(frozen=True)
class HomLocElement:
    """A local operator ``T: M -> L^1(mu_Y)`` with its pointwise norm ``|T|``."""

    pullback: PullbackModule
    operator: Callable[[ModuleElement], Sequence]
    tau: tuple
    norm: tuple

    def __call__(self, v: ModuleElement):
        return self.operator(v)


def homloc_iso(pb: PullbackModule, L: Callable) -> HomLocElement:
    """``I(L)(v) = L(phi*v)``, with ``|I(L)|`` the fiberwise dual norm of its symbol."""
    M, phi = pb.source, pb.phi
    Y = phi.source

    def T(v):
        return tuple(L(pb.pull(v)))

    tau = []
    for y, x in enumerate(phi.assignment):
        if Y.is_positive(y):
            tau.append(tuple(T(M.localized(x, e))[y] for e in M.fibers[x].basis()))
        else:
            tau.append(M.fibers[x].zero())
    norm = tuple(
        M.fibers[x].dual_norm(t) if Y.is_positive(y) else Fraction(0)
        for y, (x, t) in enumerate(zip(phi.assignment, tau))
    )
    return HomLocElement(pb, T, tuple(tau), norm)


def homloc_sampled_norm(H: HomLocElement, rng: random.Random, extra: int = 16):
    """Lower bound for ``|T|`` from attainers localized at ``phi(y)`` and random unit sections."""
    pb = H.pullback
    M, phi = pb.source, pb.phi
    pool = [M.localized(x, M.fibers[x].attainer(H.tau[y])) for y, x in enumerate(phi.assignment)
            if phi.source.is_positive(y)]
    pool += [M.random_unit_element(rng) for _ in range(extra)]
    best = [Fraction(0)] * len(phi.source)
    for v in pool:
        vals, pv = H(v), pointwise_norm(v)
        for y in phi.source.support:
            # only sections with |v|(phi(y)) <= 1 are admissible, which all pool members are
            a = abs(vals[y])
            if a > best[y]:
                best[y] = a
    return tuple(best)


def homloc_inverse(H: HomLocElement) -> LocalOperatorExtension:
    return extend_local_operator(H.pullback, H.operator, H.norm)


def verify_homloc(pb: PullbackModule, rng: random.Random, samples: int = 4) -> dict:
    """``homloc_iso`` is a norm-preserving bijection inverted by ``extend_local_operator``."""
    D = dual_module(pb.module)
    gens = [e for (_, _, e) in pb.module.basis()]
    round_trip = True
    norms = True
    sampled_ok = True
    images = []
    for w in [D.random_element(rng) for _ in range(samples)] + [D.module.zero()]:
        L = D.functional(w)
        H = homloc_iso(pb, L)
        pl = pointwise_norm(w)
        norms &= all(close(H.norm[y], pl[y]) for y in pb.phi.source.support)
        ext = homloc_inverse(H)
        round_trip &= all(tuple(ext(g)) == tuple(L(g)) for g in gens)
        s = homloc_sampled_norm(H, rng)
        sampled_ok &= all(close(s[y], H.norm[y]) for y in pb.phi.source.support)
    dual_basis = [e for (_, _, e) in D.module.basis()]
    M = pb.source
    for w in dual_basis:
        H = homloc_iso(pb, D.functional(w))
        images.append([c for (_, _, e) in M.basis() for c in H(e)])
    injective = rank(images) == len(dual_basis) if dual_basis else True
    # surjectivity: a random local operator comes from its extension
    surj = True
    for _ in range(samples):
        tau = [tuple(Fraction(rng.randint(-5, 5)) for _ in range(M.fibers[x].dim))
               for x in pb.phi.assignment]

        def T(v, tau=tau):
            return tuple(dot(t, v.values[x]) for t, x in zip(tau, pb.phi.assignment))

        g = tuple(M.fibers[x].dual_norm(t) for t, x in zip(tau, pb.phi.assignment))
        ext = extend_local_operator(pb, T, g)
        H = homloc_iso(pb, ModuleFunctional(pb.module, ext))
        surj &= all(
            pb.phi.source.canonical(H(e)) == pb.phi.source.canonical(T(e)) for (_, _, e) in M.basis()
        )
    return {
        "round_trip": round_trip,
        "pointwise_norm_preserved": norms,
        "sampled_norm_attained": sampled_ok,
        "injective": injective,
        "surjective": surj,
    }


# -- L^p / L^inf correspondence --------------------------------------------------------

def cp_restrict(M: SectionModule, p) -> SectionModule:
    """``C_p``: re-norm an ``L^inf``-normed module by the ``L^p`` norm."""
    return M.with_exponent(p)


def restrict(Mp: SectionModule) -> SectionModule:
    """``R``: the elements of bounded pointwise norm, normed in ``L^inf``."""
    return Mp.with_exponent(INF)


def lp_linf_dual_check(M: SectionModule, p=2, rng: Optional[random.Random] = None) -> bool:
    """``M* = R(C_p(M)*)`` compared section by section on generators and samples."""
    rng = rng or random.Random(0)
    if M.p != INF:
        M = restrict(M)
    left = dual_module(M, mode="linf")
    right_lp = dual_module(cp_restrict(M, p))
    right = DualModule(M, restrict(right_lp.module), "linf")
    if left.module.fibers != right.module.fibers or left.module.p != right.module.p:
        return False
    for w in [left.random_element(rng) for _ in range(4)] + [e for (_, _, e) in left.module.basis()]:
        L = left.functional(w)
        if functional_to_section(L, right) != right.element(w.values):
            return False
        Lp = right_lp.functional(right_lp.element(w.values))
        if not all(L(e) == Lp(M.with_exponent(p).element(e.values)) for (_, _, e) in M.basis()):
            return False
    return True


def functional_norm(omega: ModuleElement):
    """``|| |omega| ||_{L^q}``."""
    return lp_module_norm(omega)
