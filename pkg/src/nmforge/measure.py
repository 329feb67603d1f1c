"""Finite measure spaces, measurable maps and refining partition chains.

Every subset of the carrier is measurable. Functions on a space are tuples
aligned with ``space.points``; sets are frozensets of point indices.

>>> X = make_space(["a", "b"], ["1/2", "1/2"])
>>> X.total_mass()
Fraction(1, 1)
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from math import lcm
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import (
    AllNull,
    DuplicateLabel,
    MapNotMeasurePreserving,
    NegativeWeight,
    NotAbsolutelyContinuous,
    UnknownPoint,
)
from .exact import to_fraction

Function = tuple  # tuple of scalars aligned with a space's points


@dataclass(frozen=True)
class FiniteMeasureSpace:
    points: tuple[str, ...]
    weights: tuple[Fraction, ...]
    _index: Mapping[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.points) != len(self.weights):
            raise ValueError("points and weights differ in length")
        if len(set(self.points)) != len(self.points):
            seen = set()
            dup = next(p for p in self.points if p in seen or seen.add(p))
            raise DuplicateLabel(f"duplicate point label {dup!r}")
        for p, w in zip(self.points, self.weights):
            if w < 0:
                raise NegativeWeight(f"point {p!r} has negative weight {w}")
        if not any(w > 0 for w in self.weights):
            raise AllNull("space has no point of positive mass")
        object.__setattr__(self, "_index", {p: i for i, p in enumerate(self.points)})

    def __len__(self):
        return len(self.points)

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise UnknownPoint(f"unknown point {label!r}") from None

    def indices(self, labels: Iterable[str]) -> frozenset[int]:
        return frozenset(self.index(l) for l in labels)

    def labels(self, idx: Iterable[int]) -> list[str]:
        return [self.points[i] for i in sorted(idx)]

    @cached_property
    def support(self) -> frozenset[int]:
        """Indices of the positive-mass points."""
        return frozenset(i for i, w in enumerate(self.weights) if w > 0)

    @cached_property
    def null_points(self) -> frozenset[int]:
        return frozenset(i for i, w in enumerate(self.weights) if w == 0)

    def is_positive(self, i: int) -> bool:
        return i in self.support

    def mass(self, subset: Iterable[int]) -> Fraction:
        return sum((self.weights[i] for i in subset), Fraction(0))

    def total_mass(self) -> Fraction:
        return sum(self.weights, Fraction(0))

    def integrate(self, f: Sequence):
        return sum((f[i] * w for i, w in enumerate(self.weights) if w > 0), Fraction(0))

    def canonical(self, f: Sequence) -> Function:
        """The representative of the a.e.-class of ``f`` vanishing on null points."""
        return tuple(f[i] if w > 0 else Fraction(0) for i, w in enumerate(self.weights))

    def ae_equal(self, f: Sequence, g: Sequence) -> bool:
        return all(f[i] == g[i] for i in self.support)

    def indicator(self, subset: Iterable[int]) -> Function:
        s = set(subset)
        return tuple(Fraction(1) if i in s else Fraction(0) for i in range(len(self)))

    def constant(self, c) -> Function:
        return tuple(Fraction(c) for _ in self.points)

    def function(self, values: Sequence) -> Function:
        if len(values) != len(self):
            raise ValueError(f"function has {len(values)} values, space has {len(self)} points")
        return tuple(values)


def make_space(labels: Sequence[str], weights: Sequence) -> FiniteMeasureSpace:
    """Validate and build a finite measure space from labels and rational weights."""
    return FiniteMeasureSpace(tuple(labels), tuple(to_fraction(w) for w in weights))


@dataclass(frozen=True)
class MeasurableMap:
    source: FiniteMeasureSpace
    target: FiniteMeasureSpace
    assignment: tuple[int, ...]  # source index -> target index
    measure_preserving: bool = field(init=False)
    absolutely_continuous: bool = field(init=False)

    def __post_init__(self):
        if len(self.assignment) != len(self.source):
            raise ValueError("assignment must be defined on every source point")
        pushed = _push_weights(self, self.source.weights)
        object.__setattr__(self, "measure_preserving", pushed == self.target.weights)
        object.__setattr__(
            self,
            "absolutely_continuous",
            all(pushed[x] == 0 for x in self.target.null_points),
        )

    def __call__(self, y: int) -> int:
        return self.assignment[y]

    def preimage(self, subset: Iterable[int]) -> frozenset[int]:
        s = set(subset)
        return frozenset(y for y, x in enumerate(self.assignment) if x in s)

    def fiber(self, x: int) -> frozenset[int]:
        return frozenset(y for y, t in enumerate(self.assignment) if t == x)

    def compose_function(self, g: Sequence) -> Function:
        """``g o phi`` for a function ``g`` on the target."""
        return tuple(g[x] for x in self.assignment)

    def require_measure_preserving(self):
        if not self.measure_preserving:
            raise MapNotMeasurePreserving(
                "pushforward of the source measure differs from the target measure"
            )

    def require_absolutely_continuous(self):
        if not self.absolutely_continuous:
            raise NotAbsolutelyContinuous(
                "pushforward of the source measure charges a null target point"
            )


def make_map(source: FiniteMeasureSpace, target: FiniteMeasureSpace,
             assign: Mapping[str, str]) -> MeasurableMap:
    unknown = set(assign) - set(source.points)
    if unknown:
        raise UnknownPoint(f"map assigns unknown source points {sorted(unknown)}")
    missing = [p for p in source.points if p not in assign]
    if missing:
        raise UnknownPoint(f"map leaves source points {missing} unassigned")
    return MeasurableMap(source, target, tuple(target.index(assign[p]) for p in source.points))


def identity_map(space: FiniteMeasureSpace) -> MeasurableMap:
    return MeasurableMap(space, space, tuple(range(len(space))))


def _push_weights(phi: MeasurableMap, values: Sequence) -> tuple:
    out = [Fraction(0)] * len(phi.target)
    for y, x in enumerate(phi.assignment):
        out[x] = out[x] + values[y]
    return tuple(out)


def pushforward(phi: MeasurableMap, f: Sequence) -> Function:
    """The measure ``phi_*(f mu_source)`` as a tuple of masses on the target."""
    mu = phi.source.weights
    return _push_weights(phi, [f[y] * mu[y] for y in range(len(mu))])


def _density_plan(phi: MeasurableMap) -> tuple:
    """Per target point: source points, their integer weights, and the divisor
    turning an integer-weighted sum into ``Pr`` at that point (None when null)."""
    plan = phi.__dict__.get("_density_plan")
    if plan is None:
        mu = phi.source.weights
        den = lcm(*(w.denominator for w in mu))
        fibres = [[] for _ in phi.target.points]
        for y, x in enumerate(phi.assignment):
            if mu[y]:
                fibres[x].append((y, int(mu[y] * den)))
        plan = tuple(
            (tuple(fibres[x]), den * w if w > 0 else None)
            for x, w in enumerate(phi.target.weights)
        )
        phi.__dict__["_density_plan"] = plan
    return plan


def pushforward_density(phi: MeasurableMap, f: Sequence) -> Function:
    """``d(phi_*(f mu_source)) / d mu_target``; equal to
    ``radon_nikodym(pushforward(phi, f), phi.target)`` for absolutely continuous maps."""
    phi.require_absolutely_continuous()
    out = []
    try:
        for fibre, div in _density_plan(phi):
            if div is None:
                out.append(Fraction(0))
                continue
            num, den = 0, 1
            for y, w in fibre:
                v = f[y]
                vd = v.denominator
                if vd == den:
                    num += v.numerator * w
                else:
                    num = num * vd + v.numerator * w * den
                    den *= vd
            out.append(Fraction(num * div.denominator, den * div.numerator))
        return tuple(out)
    except AttributeError:  # float entries
        return radon_nikodym(pushforward(phi, f), phi.target)


def radon_nikodym(nu: Sequence, mu: FiniteMeasureSpace) -> Function:
    """Density ``g`` with ``nu = g mu``, set to 0 on ``mu``-null points."""
    if len(nu) != len(mu):
        raise ValueError("measure and space differ in length")
    out = []
    for x, w in enumerate(mu.weights):
        if w > 0:
            out.append(nu[x] / w)
        elif nu[x] != 0:
            raise NotAbsolutelyContinuous(
                f"measure charges the null point {mu.points[x]!r} with mass {nu[x]}"
            )
        else:
            out.append(Fraction(0))
    return tuple(out)


# -- partition chains ----------------------------------------------------------

Partition = tuple  # tuple of frozensets, ordered by smallest member index


def _order_cells(cells: Iterable[frozenset]) -> Partition:
    return tuple(sorted((c for c in cells if c), key=min))


def refine(partition: Partition, subset: frozenset) -> Partition:
    """Split every cell along ``subset``."""
    cells = []
    for c in partition:
        cells.append(c & subset)
        cells.append(c - subset)
    return _order_cells(cells)


@dataclass(frozen=True)
class PartitionChain:
    space: FiniteMeasureSpace
    generators: tuple[frozenset[int], ...]
    levels: tuple[Partition, ...]
    fully_refining: bool

    def __len__(self):
        return len(self.levels)

    def cell_of(self, k: int, x: int) -> frozenset[int]:
        return next(c for c in self.levels[k] if x in c)

    def labelled(self, k: int) -> list[list[str]]:
        return [self.space.labels(c) for c in self.levels[k]]

    @cached_property
    def integer_cells(self) -> tuple[int, tuple]:
        """Common weight denominator and, per level, ``(cell, int weights, int mass)``
        for each positive-mass cell. Used by the integer fast path of conditional
        expectation."""
        w = self.space.weights
        den = lcm(*(x.denominator for x in w))
        iw = [int(x * den) for x in w]
        per_level = []
        for part in self.levels:
            cells = []
            for c in part:
                idx = tuple(sorted(c))
                ws = tuple(iw[i] for i in idx)
                if sum(ws):
                    cells.append((idx, ws, sum(ws)))
            per_level.append(tuple(cells))
        return den, tuple(per_level)


def build_chain(space: FiniteMeasureSpace, generators: Sequence[Iterable]) -> PartitionChain:
    """Partitions generated by growing initial segments of ``generators``.

    Generators may be given as label collections or index collections.
    """
    gens = []
    for g in generators:
        g = list(g)
        if all(isinstance(e, str) for e in g):
            gens.append(space.indices(g))
        else:
            bad = [e for e in g if not (isinstance(e, int) and 0 <= e < len(space))]
            if bad:
                raise UnknownPoint(f"generator mentions unknown points {bad}")
            gens.append(frozenset(g))
    levels = [_order_cells([frozenset(range(len(space)))])]
    for g in gens:
        levels.append(refine(levels[-1], g))
    last = levels[-1]
    refined = all(len(c & space.support) <= 1 for c in last)
    return PartitionChain(space, tuple(gens), tuple(levels), refined)
