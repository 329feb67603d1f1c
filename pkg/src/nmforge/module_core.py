"""Strong bundles and the normed modules of their sections.

A module is always presented concretely: its elements are sections
``x -> v(x) in V_x`` of a bundle over a finite measure space, taken modulo a
sigma-ideal. With the measure ideal the canonical representative vanishes on
null points; with the trivial ideal every point counts.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

from .doob import rep, rep_of_power
from .errors import ChainNotRefining, DimensionMismatch, NotAPartition, ValidationError
from .exact import close, in_span, is_exact, leq, power, rank, root, to_fraction
from .fiber import FiberSpace
from .measure import FiniteMeasureSpace, Function, PartitionChain

INF = math.inf
MEASURE_IDEAL = "measure"
TRIVIAL_IDEAL = "trivial"

Section = tuple  # tuple of fiber vectors aligned with the base points


def parse_exponent(p) -> Fraction | float:
    """``"inf"``/``inf`` to ``math.inf``; anything else to an exact rational."""
    if p is None:
        return INF
    if isinstance(p, float) and math.isinf(p):
        return INF
    if isinstance(p, str) and p.strip().lower() in ("inf", "infinity", "oo"):
        return INF
    return to_fraction(p)


def conjugate(p) -> Fraction | float:
    p = parse_exponent(p)
    if p == INF:
        return Fraction(1)
    if p == 1:
        return INF
    return p / (p - 1)


@dataclass(frozen=True)
class StrongBundle:
    base: FiniteMeasureSpace
    fibers: tuple[FiberSpace, ...]
    test_sections: tuple[Section, ...] = ()
    names: tuple[str, ...] = ()

    def __post_init__(self):
        if len(self.fibers) != len(self.base):
            raise ValidationError("one fiber per base point is required")
        for s in self.test_sections:
            check_section(self, s)

    def fiber_at(self, x: int) -> FiberSpace:
        return self.fibers[x]

    def zero_section(self) -> Section:
        return tuple(f.zero() for f in self.fibers)

    def section(self, name: str) -> Section:
        return self.test_sections[self.names.index(name)]

    def _flatten(self, s: Section, points) -> list:
        return [c for x in sorted(points) for c in s[x]]

    def is_test_section(self, s: Section) -> bool:
        """Whether ``s`` agrees off a null set with a combination of test sections."""
        pts = self.base.support
        span = [self._flatten(t, pts) for t in self.test_sections]
        return in_span(span, self._flatten(s, pts))

    def closure_defect(self, rng: random.Random, trials: int = 16):
        """A witness ``(w1, w2, a1, a2)`` breaking closure, or ``None``."""
        if not self.test_sections:
            return None
        for _ in range(trials):
            w1 = rng.choice(self.test_sections)
            w2 = rng.choice(self.test_sections)
            a1 = Fraction(rng.randint(-5, 5), rng.randint(1, 4))
            a2 = Fraction(rng.randint(-5, 5), rng.randint(1, 4))
            combo = tuple(
                tuple(a1 * p + a2 * q for p, q in zip(u, v)) for u, v in zip(w1, w2)
            )
            if not self.is_test_section(combo):
                return (w1, w2, a1, a2)
        return None


def check_section(bundle: StrongBundle, s: Sequence) -> Section:
    if len(s) != len(bundle.base):
        raise DimensionMismatch(f"section has {len(s)} values over {len(bundle.base)} points")
    for x, (f, v) in enumerate(zip(bundle.fibers, s)):
        if len(v) != f.dim:
            raise DimensionMismatch(
                f"value at {bundle.base.points[x]!r} has length {len(v)}, fiber dim {f.dim}"
            )
    return tuple(tuple(v) for v in s)


@dataclass(frozen=True)
class SectionModule:
    """``L^p`` sections of ``bundle`` modulo ``ideal``.

    ``p`` is a rational in (1, inf) or ``math.inf``. The trivial ideal is only
    meaningful for ``p = inf``.
    """

    bundle: StrongBundle
    p: Fraction | float = Fraction(2)
    ideal: str = MEASURE_IDEAL

    def __post_init__(self):
        object.__setattr__(self, "p", parse_exponent(self.p))
        if self.ideal not in (MEASURE_IDEAL, TRIVIAL_IDEAL):
            raise ValidationError(f"unknown ideal {self.ideal!r}")
        if self.ideal == TRIVIAL_IDEAL and self.p != INF:
            raise ValidationError("modules over the trivial ideal are L-infinity normed")
        if self.p != INF and self.p < 1:
            raise ValidationError("module exponent must be at least 1")

    @property
    def base(self) -> FiniteMeasureSpace:
        return self.bundle.base

    @property
    def fibers(self):
        return self.bundle.fibers

    def relevant_points(self) -> frozenset[int]:
        """Points not forming a negligible set: the support, or everything."""
        if self.ideal == TRIVIAL_IDEAL:
            return frozenset(range(len(self.base)))
        return self.base.support

    def element(self, values: Sequence) -> "ModuleElement":
        values = check_section(self.bundle, values)
        if self.ideal == MEASURE_IDEAL:
            rel = self.base.support
            values = tuple(v if x in rel else self.fibers[x].zero() for x, v in enumerate(values))
        return ModuleElement(self, values)

    def named(self, name: str) -> "ModuleElement":
        return self.element(self.bundle.section(name))

    def zero(self) -> "ModuleElement":
        return self.element(self.bundle.zero_section())

    def basis(self) -> list[tuple[int, int, "ModuleElement"]]:
        """Indicator-localized coordinate sections ``e_i 1_{x}`` on relevant points."""
        out = []
        for x in sorted(self.relevant_points()):
            for i, e in enumerate(self.fibers[x].basis()):
                vals = list(self.bundle.zero_section())
                vals[x] = e
                out.append((x, i, self.element(vals)))
        return out

    def localized(self, x: int, vector: Sequence) -> "ModuleElement":
        vals = list(self.bundle.zero_section())
        vals[x] = tuple(vector)
        return self.element(vals)

    def random_element(self, rng: random.Random, lo: int = -8, hi: int = 8) -> "ModuleElement":
        return self.element(
            [tuple(Fraction(rng.randint(lo, hi)) for _ in range(f.dim)) for f in self.fibers]
        )

    def random_unit_element(self, rng: random.Random) -> "ModuleElement":
        """A random element with ``|v| <= 1`` everywhere."""
        v = self.random_element(rng)
        return self.element([f.unit_scale(val) for f, val in zip(self.fibers, v.values)])

    def with_exponent(self, p) -> "SectionModule":
        return SectionModule(self.bundle, p, self.ideal)

    def dimension(self) -> int:
        return sum(self.fibers[x].dim for x in self.relevant_points())


@dataclass(frozen=True)
class ModuleElement:
    module: SectionModule
    values: Section

    def _same(self, other: "ModuleElement"):
        if other.module.bundle.fibers != self.module.bundle.fibers or other.module.base != self.module.base:
            raise ValidationError("elements belong to different modules")

    def __add__(self, other):
        self._same(other)
        return self.module.element(
            [tuple(a + b for a, b in zip(u, v)) for u, v in zip(self.values, other.values)]
        )

    def __sub__(self, other):
        return self + other.scale(-1)

    def __neg__(self):
        return self.scale(-1)

    def scale(self, c) -> "ModuleElement":
        return self.module.element([tuple(c * a for a in v) for v in self.values])

    def multiply(self, f: Sequence) -> "ModuleElement":
        """Product with a bounded function ``f`` on the base."""
        return self.module.element(
            [tuple(f[x] * a for a in v) for x, v in enumerate(self.values)]
        )

    def __rmul__(self, c):
        return self.scale(c)

    def at(self, x: int):
        return self.values[x]

    def is_zero(self) -> bool:
        return all(all(c == 0 for c in self.values[x]) for x in self.module.relevant_points())

    def __eq__(self, other):
        if not isinstance(other, ModuleElement):
            return NotImplemented
        rel = self.module.relevant_points()
        return rel == other.module.relevant_points() and all(
            self.values[x] == other.values[x] for x in rel
        )

    def __hash__(self):
        return hash(tuple(self.values[x] for x in sorted(self.module.relevant_points())))


# -- operations -----------------------------------------------------------------

def pointwise_norm(element: ModuleElement) -> Function:
    """``x -> |v(x)|_{V_x}`` on relevant points, 0 elsewhere."""
    rel = element.module.relevant_points()
    return tuple(
        f.norm(v) if x in rel else Fraction(0)
        for x, (f, v) in enumerate(zip(element.module.fibers, element.values))
    )


def pointwise_norm_power(element: ModuleElement, e) -> Function:
    rel = element.module.relevant_points()
    return tuple(
        f.norm_power(v, e) if x in rel else Fraction(0)
        for x, (f, v) in enumerate(zip(element.module.fibers, element.values))
    )


def lp_module_norm(element: ModuleElement):
    """``(sum |v|^p mu)^(1/p)``, or the sup over relevant points when ``p = inf``."""
    p = element.module.p
    if p == INF:
        norms = pointwise_norm(element)
        return max((norms[x] for x in element.module.relevant_points()), default=Fraction(0))
    return root(lp_module_norm_power(element), p)


def lp_module_norm_power(element: ModuleElement):
    """``sum |v|^p mu`` for finite ``p`` (the norm raised to ``p``)."""
    p = element.module.p
    return element.module.base.integrate(pointwise_norm_power(element, p))


def glue(module: SectionModule, partition: Sequence[Iterable[int]],
         elements: Sequence[ModuleElement]) -> ModuleElement:
    """The element agreeing with ``elements[n]`` on ``partition[n]``."""
    cells = [frozenset(c) for c in partition]
    if len(cells) != len(elements):
        raise ValidationError("one element per partition piece is required")
    seen: set[int] = set()
    for c in cells:
        if seen & c:
            raise NotAPartition("partition pieces overlap")
        seen |= c
    if seen != set(range(len(module.base))):
        raise NotAPartition("partition pieces do not cover the base")
    vals = list(module.bundle.zero_section())
    for c, e in zip(cells, elements):
        for x in c:
            vals[x] = e.values[x]
    return module.element(vals)


def restrict(element: ModuleElement, subset: Iterable[int]) -> ModuleElement:
    """``1_E * v``."""
    return element.multiply(element.module.base.indicator(subset))


# -- fiberization ---------------------------------------------------------------

@dataclass
class FiberizationResult:
    """Fibers recovered from a module through representative selection.

    For each positive-mass point ``x`` the quotient of the span of
    ``M_x = {v : x in Leb_p(|v|)}`` by the seminorm ``|.|_x`` is identified
    with the bundle fiber ``V_x`` through evaluation; ``checks`` records the
    verifications performed while building that identification.
    """

    module: SectionModule
    chain: PartitionChain
    p: Fraction
    points: tuple[int, ...]
    fibers: dict[int, FiberSpace]
    checks: dict[str, bool] = field(default_factory=dict)
    witnesses: dict[str, object] = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, repr=False)

    def rep_p_norm(self, element: ModuleElement):
        """``Rep_p(|v|)`` over the base, computed along the chain."""
        key = element.values
        if key not in self._cache:
            self._cache[key] = rep_of_power(
                self.chain, self.p, pointwise_norm_power(element, self.p)
            )
        return self._cache[key]

    def in_fiber_domain(self, x: int, element: ModuleElement) -> bool:
        """Membership of ``element`` in ``M_x``."""
        return x in self.rep_p_norm(element).leb_set

    def seminorm(self, x: int, element: ModuleElement):
        """Closed form ``|v|_x = Rep_p(|v|)(x)``."""
        return self.rep_p_norm(element).rep[x]

    def decomposition_seminorm(self, x: int, element: ModuleElement,
                               pool: Sequence[ModuleElement], max_parts: int = 3,
                               rng: Optional[random.Random] = None, pair_budget: int = 32):
        """Smallest ``sum Rep_p(|v_i|)(x)`` over sampled decompositions ``v = sum v_i``."""
        best = self.seminorm(x, element)
        for w in pool:
            parts = [w, element - w]
            best = min(best, sum(self.seminorm(x, u) for u in parts))
        if max_parts >= 3 and len(pool) >= 2:
            rng = rng or random.Random(0)
            for _ in range(pair_budget):
                w1, w2 = rng.sample(list(pool), 2)
                parts = [w1, w2, element - w1 - w2]
                best = min(best, sum(self.seminorm(x, u) for u in parts))
        return best

    def embed(self, x: int, element: ModuleElement):
        """``iota_x(v)`` as a vector of the identified fiber."""
        return element.values[x]

    def rep_section(self, element: ModuleElement) -> Section:
        """``Rep(v)``: ``iota_x(v)`` on ``Leb_p(|v|)``, zero elsewhere and on null points."""
        leb = self.rep_p_norm(element).leb_set
        return tuple(
            self.embed(x, element) if (x in leb and x in self.fibers) else f.zero()
            for x, f in enumerate(self.module.fibers)
        )

    def rep_class(self, element: ModuleElement) -> ModuleElement:
        return self.module.element(self.rep_section(element))


def fiberize(module: SectionModule, chain: PartitionChain, p=None,
             rng: Optional[random.Random] = None, pool_size: int = 32,
             tol: float = 1e-9) -> FiberizationResult:
    """Rebuild the fibers of ``module`` from its pointwise norm and ``chain``.

    Verifies, on the instance, that evaluation identifies each quotient
    ``span(M_x)/ker |.|_x`` with ``V_x`` isometrically, that sampled
    decompositions never beat the closed-form seminorm, that ``Rep`` is
    linear on common Lebesgue points, and that ``v -> [Rep(v)]`` is a
    pointwise-norm-preserving bijection.
    """
    if not chain.fully_refining:
        raise ChainNotRefining("fiberization needs a chain separating positive-mass points")
    if chain.space != module.base:
        raise ValidationError("chain and module live on different spaces")
    p = parse_exponent(module.p if p is None else p)
    if p == INF:
        p = Fraction(2)
    rng = rng or random.Random(0)
    pts = tuple(sorted(module.base.support))
    res = FiberizationResult(module, chain, p, pts, {x: module.fibers[x] for x in pts})
    basis = module.basis()
    pool = [module.random_element(rng) for _ in range(pool_size)]

    ident = True
    surjective = True
    for x in pts:
        f = module.fibers[x]
        for (_, _, g) in basis:
            if not close(res.seminorm(x, g), f.norm(g.values[x]), tol):
                ident = False
                res.witnesses.setdefault("identification", (x, g))
        for g in pool[:8]:
            if not close(res.seminorm(x, g), f.norm(g.values[x]), tol):
                ident = False
                res.witnesses.setdefault("identification", (x, g))
        if rank([g.values[x] for (_, _, g) in basis]) != f.dim:
            surjective = False
    res.checks["evaluation_identifies_fiber"] = ident
    res.checks["evaluation_surjective"] = surjective

    # falsification probe for the decomposition infimum
    infimum_ok = True
    for v in pool[:4] + [module.zero()]:
        for x in pts:
            closed = res.seminorm(x, v)
            searched = res.decomposition_seminorm(x, v, pool, rng=rng)
            if not (leq(closed, searched, tol) and close(searched, closed, tol)):
                infimum_ok = False
                res.witnesses.setdefault("decomposition", (x, v))
    res.checks["decomposition_infimum_matches_closed_form"] = infimum_ok

    # Rep is linear where all three Lebesgue sets meet
    lin_ok = True
    for _ in range(8):
        v1, v2 = rng.sample(pool, 2)
        a1 = Fraction(rng.randint(-4, 4), rng.randint(1, 3))
        a2 = Fraction(rng.randint(-4, 4), rng.randint(1, 3))
        v = v1.scale(a1) + v2.scale(a2)
        common = (res.rep_p_norm(v1).leb_set & res.rep_p_norm(v2).leb_set
                  & res.rep_p_norm(v).leb_set)
        r, r1, r2 = res.rep_section(v), res.rep_section(v1), res.rep_section(v2)
        for x in common & set(pts):
            if r[x] != tuple(a1 * s + a2 * t for s, t in zip(r1[x], r2[x])):
                lin_ok = False
                res.witnesses.setdefault("linearity", (x, v1, v2, a1, a2))
    res.checks["rep_linear_on_common_leb"] = lin_ok

    # v -> [Rep(v)] preserves the pointwise norm and is a bijection
    norm_ok = True
    for v in pool + [e for (_, _, e) in basis]:
        rv = res.rep_section(v)
        pn = pointwise_norm(v)
        for x in pts:
            if not close(module.fibers[x].norm(rv[x]), pn[x], tol):
                norm_ok = False
                res.witnesses.setdefault("norm", (x, v))
    res.checks["rep_preserves_pointwise_norm"] = norm_ok
    images = [
        [c for x in pts for c in res.rep_section(e)[x]] for (_, _, e) in basis
    ]
    total = sum(module.fibers[x].dim for x in pts)
    res.checks["rep_bijective"] = len(images) == total and rank(images) == total
    return res
