"""Pullback of a section module along a measure-preserving map.

The pullback of ``M`` along ``phi: Y -> X`` is realized as the sections of the
bundle ``y -> V_{phi(y)}`` with ``phi*v = v o phi``. A second realization,
built from the fiberized module in relabelled coordinates, exists so that the
canonical isomorphism between realizations can be computed and checked.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

from .errors import DimensionMismatch, DominationFails, ValidationError
from .exact import close, dot, leq, power, rank, solve
from .fiber import FiberSpace
from .measure import FiniteMeasureSpace, MeasurableMap, PartitionChain, build_chain, make_space
from .module_core import (
    INF,
    MEASURE_IDEAL,
    ModuleElement,
    SectionModule,
    StrongBundle,
    fiberize,
    lp_module_norm_power,
    parse_exponent,
    pointwise_norm,
)

Coords = Optional[tuple]  # per point of Y: (perm, signs) or None


def _relabel(vec, coords):
    if coords is None:
        return tuple(vec)
    perm, signs = coords
    return tuple(s * vec[k] for k, s in zip(perm, signs))


def _unrelabel(vec, coords):
    if coords is None:
        return tuple(vec)
    perm, signs = coords
    out = [Fraction(0)] * len(vec)
    for j, (k, s) in enumerate(zip(perm, signs)):
        out[k] = s * vec[j]
    return tuple(out)


@dataclass(frozen=True)
class PullbackModule:
    """A realization of ``phi*M`` together with its pullback map.

    Attributes
    ----------
    phi : MeasurableMap
        ``Y -> X``.
    source : SectionModule
        ``M`` over ``X``.
    module : SectionModule
        The realized module over ``Y``.
    coords : tuple
        Per point of ``Y``, ``None`` or the signed permutation presenting the
        fiber ``V_{phi(y)}`` in relabelled coordinates.
    """

    phi: MeasurableMap
    source: SectionModule
    module: SectionModule
    coords: tuple = ()
    route: str = "direct"
    checks: dict = field(default_factory=dict, compare=False, hash=False)
    _representative: Optional[Callable] = field(default=None, compare=False, hash=False, repr=False)

    def pull(self, v: ModuleElement) -> ModuleElement:
        """``phi*v``."""
        if v.module.base != self.phi.target:
            raise ValidationError("element does not live on the map's target")
        vals = self._representative(v) if self._representative else v.values
        return self.module.element(
            [_relabel(vals[x], self._coords(y)) for y, x in enumerate(self.phi.assignment)]
        )

    def _coords(self, y):
        return self.coords[y] if self.coords else None

    def pull_function(self, f: Sequence):
        return self.phi.compose_function(f)

    def value_in_source_fiber(self, element: ModuleElement, y: int):
        """The value of ``element`` at ``y`` read in the coordinates of ``V_{phi(y)}``."""
        return _unrelabel(element.values[y], self._coords(y))

    def generator(self, y: int, i: int) -> ModuleElement:
        """``1_{y} * phi*(e_i 1_{phi(y)})``, the single-point generator at ``(y, i)``."""
        x = self.phi(y)
        e = self.source.fibers[x].basis()[i]
        return self.pull(self.source.localized(x, e)).multiply(self.phi.source.indicator([y]))


def _pulled_bundle(phi: MeasurableMap, M: SectionModule, coords) -> StrongBundle:
    fibers = []
    for y, x in enumerate(phi.assignment):
        f = M.fibers[x]
        c = coords[y] if coords else None
        fibers.append(f if c is None else f.relabelled(*c))
    tests = tuple(
        tuple(_relabel(s[x], coords[y] if coords else None) for y, x in enumerate(phi.assignment))
        for s in M.bundle.test_sections
    )
    return StrongBundle(phi.source, tuple(fibers), tests, M.bundle.names)


def pullback_module(phi: MeasurableMap, M: SectionModule, p=None, strict: bool = True,
                    rng: Optional[random.Random] = None, route: str = "direct",
                    chain: Optional[PartitionChain] = None) -> PullbackModule:
    """Realize ``phi*M`` and verify ``|phi*v| = |v| o phi`` on the instance.

    Parameters
    ----------
    phi : MeasurableMap
        Must be measure preserving unless ``strict`` is false.
    M : SectionModule
        Module over ``phi.target``.
    p : optional
        Exponent of the realized module; defaults to that of ``M``.
    route : {"direct", "fiberized"}
        ``"fiberized"`` rebuilds the fibers of ``M`` with ``fiberize`` over
        ``chain`` and presents them in randomly relabelled coordinates.
    """
    if M.base != phi.target:
        raise ValidationError("module does not live on the map's target")
    if strict:
        phi.require_measure_preserving()
    else:
        phi.require_absolutely_continuous()
    p = M.p if p is None else parse_exponent(p)
    rng = rng or random.Random(0)
    coords: tuple = ()
    represent = None
    if route == "fiberized":
        if chain is None:
            chain = build_chain(M.base, [[x] for x in range(len(M.base))])
        fib = fiberize(M, chain, rng=random.Random(rng.random()))
        represent = fib.rep_section
        coords = tuple(_random_signed_perm(M.fibers[x].dim, rng) for x in phi.assignment)
    elif route != "direct":
        raise ValidationError(f"unknown pullback route {route!r}")
    bundle = _pulled_bundle(phi, M, coords)
    ideal = MEASURE_IDEAL if p != INF or M.ideal == MEASURE_IDEAL else M.ideal
    module = SectionModule(bundle, p, ideal)
    pb = PullbackModule(phi, M, module, coords, route, {}, represent)
    pb.checks.update(verify_pullback(pb, rng))
    return pb


def _random_signed_perm(d, rng):
    perm = list(range(d))
    rng.shuffle(perm)
    return tuple(perm), tuple(rng.choice((1, -1)) for _ in range(d))


def verify_pullback(pb: PullbackModule, rng: random.Random, samples: int = 8) -> dict:
    """Norm identity, multiplicativity, and generation by single-point generators."""
    M, phi = pb.source, pb.phi
    probes = [e for (_, _, e) in M.basis()] + [M.random_element(rng) for _ in range(samples)]
    pos = phi.source.support
    norm_ok = True
    for v in probes:
        lhs = pointwise_norm(pb.pull(v))
        rhs = phi.compose_function(pointwise_norm(v))
        norm_ok &= all(close(lhs[y], rhs[y]) for y in pos)
    mult_ok = True
    for v in probes[-samples:]:
        f = tuple(Fraction(rng.randint(-4, 4), rng.randint(1, 4)) for _ in range(len(M.base)))
        mult_ok &= pb.pull(v.multiply(f)) == pb.pull(v).multiply(phi.compose_function(f))
    gens = [pb.generator(y, i) for y in sorted(pos) for i in range(pb.module.fibers[y].dim)]
    flat = [[c for y in sorted(pos) for c in g.values[y]] for g in gens]
    gen_ok = rank(flat) == pb.module.dimension() if flat else pb.module.dimension() == 0
    return {
        "pointwise_norm_identity": norm_ok,
        "pullback_multiplicative": mult_ok,
        "single_point_generators_span": gen_ok,
    }


# -- uniqueness ----------------------------------------------------------------

@dataclass(frozen=True)
class PullbackIsomorphism:
    """``Phi: A -> B`` with ``Phi o phi*_A = phi*_B``, stored as per-point matrices."""

    source: PullbackModule
    target: PullbackModule
    matrices: tuple  # per point of Y: rows of the matrix, or None on null points

    def __call__(self, V: ModuleElement) -> ModuleElement:
        out = []
        for y, m in enumerate(self.matrices):
            if m is None:
                out.append(self.target.module.fibers[y].zero())
            else:
                out.append(tuple(dot(row, V.values[y]) for row in m))
        return self.target.module.element(out)


def uniqueness_isomorphism(a: PullbackModule, b: PullbackModule,
                           rng: Optional[random.Random] = None, samples: int = 8):
    """The canonical ``Phi`` matching the pullback maps, with its verification.

    Returns ``(Phi, checks)``; ``checks`` records whether ``Phi`` intertwines
    the pullback maps, preserves the pointwise norm and is bijective.
    """
    if a.phi != b.phi or a.source != b.source:
        raise ValidationError("realizations of different pullbacks")
    rng = rng or random.Random(0)
    M, phi = a.source, a.phi
    mats = []
    bij = True
    for y, x in enumerate(phi.assignment):
        if not phi.source.is_positive(y):
            mats.append(None)
            continue
        basis = M.fibers[x].basis()
        cols_a = [a.pull(M.localized(x, e)).values[y] for e in basis]
        cols_b = [b.pull(M.localized(x, e)).values[y] for e in basis]
        d = len(basis)
        if rank(cols_a) != d or rank(cols_b) != d:
            bij = False
        # Phi_y A_y = B_y with A_y, B_y having the pulled basis as columns
        a_mat = [[cols_a[j][i] for j in range(d)] for i in range(d)]
        rows = []
        for i in range(d):
            # row i of Phi_y solves r A_y = (B_y)_i, i.e. A_y^T r = (B_y)_i
            at = [[a_mat[r][c] for r in range(d)] for c in range(d)]
            r = solve(at, [cols_b[j][i] for j in range(d)])
            if r is None:
                bij = False
                r = (Fraction(0),) * d
            rows.append(r)
        mats.append(tuple(rows))
    iso = PullbackIsomorphism(a, b, tuple(mats))
    probes = [e for (_, _, e) in M.basis()] + [M.random_element(rng) for _ in range(samples)]
    intertwines = all(iso(a.pull(v)) == b.pull(v) for v in probes)
    norms = True
    for _ in range(samples):
        V = a.module.random_element(rng)
        lhs, rhs = pointwise_norm(iso(V)), pointwise_norm(V)
        norms &= all(close(lhs[y], rhs[y]) for y in phi.source.support)
    return iso, {"intertwines": intertwines, "pointwise_isometric": norms, "bijective": bij}


# -- universal property ----------------------------------------------------------

@dataclass(frozen=True)
class LocalOperatorExtension:
    """``T_hat(V)(y) = <tau_y, V(y)>``, the extension of a local operator."""

    pullback: PullbackModule
    tau: tuple  # per point of Y, a functional on V_{phi(y)} in source coordinates
    bound: tuple

    def __call__(self, V: ModuleElement):
        pb = self.pullback
        return tuple(
            dot(t, pb.value_in_source_fiber(V, y)) if pb.phi.source.is_positive(y) else Fraction(0)
            for y, t in enumerate(self.tau)
        )

    def pointwise_norm(self):
        """``y -> |tau_y|'``, the smallest admissible dominating function."""
        pb = self.pullback
        return tuple(
            pb.source.fibers[x].dual_norm(t) if pb.phi.source.is_positive(y) else Fraction(0)
            for y, (x, t) in enumerate(zip(pb.phi.assignment, self.tau))
        )


def extend_local_operator(pb: PullbackModule, T: Callable[[ModuleElement], Sequence],
                          g: Sequence, rng: Optional[random.Random] = None,
                          samples: int = 4) -> LocalOperatorExtension:
    """Extend ``T: M -> L^1(mu_Y)`` with ``|T v| <= g |v| o phi`` to ``phi*M``.

    Raises
    ------
    DominationFails
        If the bound is violated. The witness is a section of ``M`` on which
        ``|T(v)|(y) > g(y) |v|(phi(y))`` at ``point``.
    """
    M, phi = pb.source, pb.phi
    Y = phi.source
    if len(g) != len(Y):
        raise DimensionMismatch("dominating function must live on the map's source")
    basis = M.basis()
    images = {(x, i): tuple(T(e)) for (x, i, e) in basis}
    tau = []
    for y, x in enumerate(phi.assignment):
        d = M.fibers[x].dim
        if not Y.is_positive(y):
            tau.append((Fraction(0),) * d)
            continue
        # locality: generators supported away from phi(y) must vanish at y
        for (x2, i, e) in basis:
            if x2 != x and images[(x2, i)][y] != 0:
                raise DominationFails(
                    f"T does not vanish at {Y.points[y]!r} on a section supported off its image",
                    witness=e, point=y,
                )
        t = tuple(images[(x, i)][y] if (x, i) in images else Fraction(0) for i in range(d))
        if not leq(M.fibers[x].dual_norm(t), g[y]):
            w = M.localized(x, M.fibers[x].attainer(t))
            raise DominationFails(
                f"|T(v)| exceeds g |v| o phi at {Y.points[y]!r}", witness=w, point=y
            )
        tau.append(t)
    ext = LocalOperatorExtension(pb, tuple(tau), tuple(g))
    rng = rng or random.Random(0)
    for _ in range(samples):
        v = M.random_element(rng)
        got, want = ext(pb.pull(v)), tuple(T(v))
        if not all(close(got[y], want[y]) for y in Y.support):
            raise ValidationError("operator is not linear on the sampled sections")
    return ext


# -- Lebesgue-Bochner sanity instance ----------------------------------------------

def bochner_instance(space: FiniteMeasureSpace, fiber: FiberSpace, p=2):
    """``phi*B`` for the map from ``space`` to a one-point base carrying ``B = fiber``."""
    point = make_space(["*"], [space.total_mass()])
    M = SectionModule(StrongBundle(point, (fiber,)), p)
    phi = MeasurableMap(space, point, (0,) * len(space))
    return pullback_module(phi, M)


def bochner_norm_power(space: FiniteMeasureSpace, fiber: FiberSpace, values: Sequence, p):
    """``int ||F||^p`` for the simple function ``F = sum_y 1_{y} values[y]``."""
    p = parse_exponent(p)
    total = Fraction(0)
    for y, w in enumerate(space.weights):
        if w > 0:
            total += w * power(fiber.norm(values[y]), p)
    return total


def bochner_check(space: FiniteMeasureSpace, fiber: FiberSpace, values: Sequence, p=2) -> bool:
    pb = bochner_instance(space, fiber, p)
    V = pb.module.element(values)
    return close(lp_module_norm_power(V), bochner_norm_power(space, fiber, values, p))
