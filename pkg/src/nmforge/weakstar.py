"""Approximation of functionals on a pullback by pulled-back functionals.

``Pr`` is the left inverse of composition with ``phi``. Localizing a
functional ``L`` on ``phi*M`` to a set ``E`` and averaging yields elements
``L_k`` of ``phi*(M*)``; their action converges to that of ``L`` as the
chain on ``Y`` refines.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

from .duality import DualModule, ModuleFunctional, dual_module, functional_to_section
from .errors import InvariantViolation, LevelOutOfRange, ValidationError
from .exact import close, is_exact, leq, power
from .measure import FiniteMeasureSpace, MeasurableMap, PartitionChain, pushforward_density
from .module_core import ModuleElement, SectionModule, parse_exponent, pointwise_norm
from .pullback import PullbackModule


@dataclass(frozen=True)
class PrOperator:
    """``Pr(f) = d(phi_*(f mu_Y)) / d mu_X``."""

    phi: MeasurableMap

    def __post_init__(self):
        self.phi.require_absolutely_continuous()

    def __call__(self, f: Sequence):
        return pushforward_density(self.phi, f)


def pr(phi: MeasurableMap, f: Sequence):
    return PrOperator(phi)(f)


def pr_law_checks(phi: MeasurableMap, f: Sequence, g: Sequence) -> dict:
    """``|Pr f| <= Pr|f|``, ``Pr(f g o phi) = g Pr f`` and the ``L^1``/``L^inf`` contractions."""
    P = PrOperator(phi)
    X, Y = phi.target, phi.source
    pf = P(f)
    pabs = P([abs(c) for c in f])
    mod = all(abs(a) <= b for a, b in zip(pf, pabs))
    pull = P([a * b for a, b in zip(f, phi.compose_function(g))])
    mult = X.ae_equal(pull, [a * b for a, b in zip(g, pf)])
    l1 = X.integrate([abs(c) for c in pf]) <= Y.integrate([abs(c) for c in f])
    sup_f = max((abs(f[y]) for y in Y.support), default=Fraction(0))
    linf = all(abs(pf[x]) <= sup_f for x in X.support)
    return {"modulus": mod, "pullback_factor": mult, "l1_contraction": l1, "linf_contraction": linf}


def jensen_check(phi: MeasurableMap, E: Sequence[int] | frozenset, f: Sequence, p) -> bool:
    """``|Pr(1_E f)|^p <= Pr(1_E |f|^p) Pr(1_E)^(p-1)`` at every positive-mass point of ``X``."""
    p = Fraction(p)
    if p < 1:
        raise ValidationError("jensen_check needs p >= 1")
    Y = phi.source
    ind = Y.indicator(E)
    P = PrOperator(phi)
    lhs = P([a * b for a, b in zip(ind, f)])
    rhs_a = P([a * power(abs(b), p) for a, b in zip(ind, f)])
    rhs_b = P(ind)
    return all(
        leq(power(abs(lhs[x]), p), rhs_a[x] * power(rhs_b[x], p - 1)) for x in phi.target.support
    )


# -- localized functionals -------------------------------------------------------------

@dataclass(frozen=True)
class LocalizedFunctional:
    """``L_E(v) = Pr(1_E L(phi*v))`` with its dual section ``eta_E`` over ``X``."""

    functional: ModuleFunctional
    section: ModuleElement
    subset: frozenset


def localized_functional(pb: PullbackModule, L: Callable, E, dual: Optional[DualModule] = None) -> LocalizedFunctional:
    E = frozenset(E)
    Y = pb.phi.source
    ind = Y.indicator(E)
    P = PrOperator(pb.phi)
    M = pb.source

    def LE(v):
        return P([a * b for a, b in zip(ind, L(pb.pull(v)))])

    F = ModuleFunctional(M, LE)
    D = dual or dual_module(M)
    return LocalizedFunctional(F, functional_to_section(F, D), E)


def localized_bound_check(pb: PullbackModule, L: Callable, omega: ModuleElement, loc: LocalizedFunctional,
               probes: Sequence[ModuleElement]) -> bool:
    """``|L_E(v)| <= |v| Pr(1_E |L|)``, with ``|L|`` the pointwise norm of ``omega``."""
    P = PrOperator(pb.phi)
    ind = pb.phi.source.indicator(loc.subset)
    bound = P([a * b for a, b in zip(ind, pointwise_norm(omega))])
    ok = True
    for v in probes:
        lv, nv = loc.functional(v), pointwise_norm(v)
        ok &= all(leq(abs(lv[x]), nv[x] * bound[x]) for x in pb.phi.target.support)
    return ok


# -- the approximating sequence ---------------------------------------------------------

@dataclass
class LevelRecord:
    level: int
    omega: ModuleElement  # L_k as a section y -> V'_{phi(y)}
    gaps: tuple
    integral_lk: object
    integral_l: object
    bound_holds: bool
    jensen_holds: bool


@dataclass
class ApproximationRun:
    """Per-level data of the ``L_k`` sequence for one functional ``L``."""

    pullback: PullbackModule
    chain: PartitionChain
    exponent: Fraction
    omega: ModuleElement
    probes: tuple
    levels: list = field(default_factory=list)

    @property
    def gaps(self) -> list[tuple]:
        return [r.gaps for r in self.levels]

    def zero_from(self) -> Optional[int]:
        """First level from which every gap vanishes."""
        k = None
        for r in reversed(self.levels):
            if all(g == 0 for g in r.gaps):
                k = r.level
            else:
                break
        return k

    def monotone(self) -> bool:
        return all(
            leq(b, a) for r0, r1 in zip(self.levels, self.levels[1:]) for a, b in zip(r0.gaps, r1.gaps)
        )

    def uniform_bound(self) -> bool:
        return all(r.bound_holds for r in self.levels)

    def jensen(self) -> bool:
        return all(r.jensen_holds for r in self.levels)


def _integral_power(space: FiniteMeasureSpace, fibers, values, e):
    return space.integrate([f.norm_power(v, e) for f, v in zip(fibers, values)])


def level_functional(pb: PullbackModule, L: Callable, chain: PartitionChain, k: int,
                     dual: Optional[DualModule] = None) -> ModuleElement:
    """``L_k = sum_j 1_{E_j} phi*L_{E_j} / (Pr(1_{E_j}) o phi)`` over positive-mass cells."""
    if not 0 <= k < len(chain.levels):
        raise LevelOutOfRange(f"level {k} not in [0, {len(chain.levels)})")
    Y, phi = pb.phi.source, pb.phi
    D = dual or dual_module(pb.source)
    P = PrOperator(phi)
    vals = [pb.source.fibers[x].zero() for x in phi.assignment]
    for cell in chain.levels[k]:
        if Y.mass(cell) == 0:
            continue
        loc = localized_functional(pb, L, cell, D)
        den = P(Y.indicator(cell))
        for y in cell:
            x = phi(y)
            if not Y.is_positive(y):
                continue
            if den[x] <= 0:
                raise InvariantViolation(
                    f"Pr(1_E) vanishes at the image of the positive-mass point {Y.points[y]!r}"
                )
            vals[y] = tuple(c / den[x] for c in loc.section.values[x])
    return dual_module(pb.module).element(vals)


def approximation_sequence(pb: PullbackModule, L: Callable, chain: PartitionChain,
                           probes: Sequence[ModuleElement], exponent=None,
                           levels: Optional[int] = None) -> ApproximationRun:
    """Run ``L_k`` along ``chain`` and record gaps, the uniform bound and the Jensen step.

    Parameters
    ----------
    pb : PullbackModule
        Direct realization of ``phi*M``.
    L : callable
        Functional on ``phi*M``.
    chain : PartitionChain
        Chain on ``Y``.
    probes : sequence of ModuleElement
        Elements ``v`` of ``M``; gaps are ``||I_phi(L_k)(phi*v) - L(phi*v)||_{L^1}``.
    exponent : rational, optional
        ``e`` in ``int |L_k|^e <= int |L|^e``; defaults to the dual exponent.
    levels : int, optional
        Number of levels to run, all by default.
    """
    if chain.space != pb.phi.source:
        raise ValidationError("chain must live on the map's source")
    Dy = dual_module(pb.module)
    omega = functional_to_section(L, Dy)
    e = parse_exponent(exponent) if exponent is not None else Dy.q
    if e < 1:
        raise ValidationError("uniform-bound exponent must be at least 1")
    n_levels = len(chain.levels) if levels is None else levels
    if not 0 < n_levels <= len(chain.levels):
        raise LevelOutOfRange(f"cannot run {n_levels} levels of a chain with {len(chain.levels)}")
    Y = pb.phi.source
    D = dual_module(pb.source)
    run = ApproximationRun(pb, chain, e, omega, tuple(probes))
    integral_l = _integral_power(Y, Dy.module.fibers, omega.values, e)
    targets = [tuple(L(pb.pull(v))) for v in probes]
    jensen_seen: dict = {}  # cells persist across levels
    je = e if is_exact(e) else 2
    for k in range(n_levels):
        wk = level_functional(pb, L, chain, k, D)
        approx = Dy.functional(wk)
        gaps = []
        jensen = True
        for v, target in zip(probes, targets):
            got = approx(pb.pull(v))
            gaps.append(Y.integrate([abs(a - b) for a, b in zip(got, target)]))
            for cell in chain.levels[k]:
                if Y.mass(cell) > 0:
                    key = (cell, target)
                    if key not in jensen_seen:
                        jensen_seen[key] = jensen_check(pb.phi, cell, target, je)
                    jensen &= jensen_seen[key]
        integral_lk = _integral_power(Y, Dy.module.fibers, wk.values, e)
        run.levels.append(
            LevelRecord(k, wk, tuple(gaps), integral_lk, integral_l, leq(integral_lk, integral_l), jensen)
        )
    return run


def embedded_is_isometric(pb: PullbackModule, eta: ModuleElement) -> bool:
    """``I_phi`` keeps the pointwise norm: ``|I_phi(phi*eta)| = |eta| o phi``."""
    from .duality import embed_pullback_dual

    Dy = dual_module(pb.module)
    F = embed_pullback_dual(pb, eta)
    w = functional_to_section(F, Dy)
    lhs = pointwise_norm(w)
    rhs = pb.phi.compose_function(pointwise_norm(eta))
    return all(close(lhs[y], rhs[y]) for y in pb.phi.source.support)
