"""Scenario files: schema, cross-reference resolution and random generation.

A scenario is a JSON object of named collections. Every entry refers to
others by name; see ``docs/scenario-format.md`` for the grammar.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError as PydanticError, field_validator

from .errors import ScenarioError, ValidationError
from .fiber import FiberSpace, fiber_from_spec
from .lifting import Lifting, make_lifting
from .measure import FiniteMeasureSpace, MeasurableMap, PartitionChain, build_chain, make_map, make_space
from .module_core import ModuleElement, SectionModule, StrongBundle, parse_exponent

Rational = Union[str, int]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class SpaceSpec(_Strict):
    points: List[str]
    weights: List[Rational]


class MapSpec(_Strict):
    source: str
    target: str
    assign: Dict[str, str]


class ChainSpec(_Strict):
    space: str
    generators: List[List[str]]


class FiberSpec(_Strict):
    kind: str
    p: Optional[str] = None
    dim: Optional[int] = None
    weights: Optional[List[Rational]] = None
    functionals: Optional[List[List[Rational]]] = None

    @field_validator("p", mode="before")
    @classmethod
    def _p_as_text(cls, v):
        return None if v is None else str(v)


class BundleSpec(_Strict):
    space: str
    fibers: Union[FiberSpec, List[FiberSpec], Dict[str, FiberSpec]]
    sections: Dict[str, List[List[Rational]]] = Field(default_factory=dict)


class ModuleSpec(_Strict):
    bundle: str
    p: Rational = "2"


class LiftingSpec(_Strict):
    space: str
    retraction: Dict[str, str] = Field(default_factory=dict)


class DualSpec(_Strict):
    module: str
    map: Optional[str] = None
    values: List[List[Rational]]


class FunctionSpec(_Strict):
    space: str
    values: List[Rational]


class ScenarioSpec(_Strict):
    spaces: Dict[str, SpaceSpec] = Field(default_factory=dict)
    maps: Dict[str, MapSpec] = Field(default_factory=dict)
    chains: Dict[str, ChainSpec] = Field(default_factory=dict)
    bundles: Dict[str, BundleSpec] = Field(default_factory=dict)
    modules: Dict[str, ModuleSpec] = Field(default_factory=dict)
    liftings: Dict[str, LiftingSpec] = Field(default_factory=dict)
    duals: Dict[str, DualSpec] = Field(default_factory=dict)
    functions: Dict[str, FunctionSpec] = Field(default_factory=dict)


@dataclass
class DualEntry:
    module: str
    map: Optional[str]
    element: ModuleElement


@dataclass
class Scenario:
    """A resolved scenario: every name maps to a constructed object."""

    name: str = "scenario"
    spaces: Dict[str, FiniteMeasureSpace] = field(default_factory=dict)
    maps: Dict[str, MeasurableMap] = field(default_factory=dict)
    chains: Dict[str, PartitionChain] = field(default_factory=dict)
    bundles: Dict[str, StrongBundle] = field(default_factory=dict)
    modules: Dict[str, SectionModule] = field(default_factory=dict)
    liftings: Dict[str, Lifting] = field(default_factory=dict)
    duals: Dict[str, DualEntry] = field(default_factory=dict)
    functions: Dict[str, tuple] = field(default_factory=dict)
    raw: dict = field(default_factory=dict, repr=False)

    def space_name(self, space: FiniteMeasureSpace) -> str:
        return next(k for k, s in self.spaces.items() if s == space)

    def chain_on(self, space: FiniteMeasureSpace) -> Optional[PartitionChain]:
        return next((c for c in self.chains.values() if c.space == space and c.fully_refining), None)

    def lifting_on(self, space: FiniteMeasureSpace) -> Optional[Lifting]:
        return next((l for l in self.liftings.values() if l.space == space), None)

    def modules_on(self, space: FiniteMeasureSpace):
        return [(k, m) for k, m in self.modules.items() if m.base == space]

    def functions_on(self, space: FiniteMeasureSpace):
        return [(k, f) for k, f in self.functions.items() if len(f) == len(space)
                and self.raw.get("functions", {}).get(k, {}).get("space") == self.space_name(space)]


def _lookup(table: dict, name: str, kind: str):
    try:
        return table[name]
    except KeyError:
        raise ScenarioError(f"unknown {kind} {name!r}") from None


def _fibers(spec, space: FiniteMeasureSpace) -> tuple[FiberSpace, ...]:
    if isinstance(spec, FiberSpec):
        f = fiber_from_spec(spec.model_dump(exclude_none=True))
        return (f,) * len(space)
    if isinstance(spec, list):
        if len(spec) != len(space):
            raise ScenarioError("fiber list length differs from the number of points")
        return tuple(fiber_from_spec(s.model_dump(exclude_none=True)) for s in spec)
    missing = [p for p in space.points if p not in spec]
    if missing or set(spec) - set(space.points):
        raise ScenarioError(f"fiber mapping must name every point exactly; missing {missing}")
    return tuple(fiber_from_spec(spec[p].model_dump(exclude_none=True)) for p in space.points)


def _vector(row) -> tuple:
    from .exact import to_fraction

    return tuple(to_fraction(c) for c in row)


def build_scenario(data: dict, name: str = "scenario") -> Scenario:
    """Validate ``data`` against the schema and resolve every cross-reference."""
    try:
        spec = ScenarioSpec.model_validate(data)
    except PydanticError as exc:
        raise ScenarioError(str(exc)) from None
    try:
        return _resolve(spec, data, name)
    except ScenarioError:
        raise
    except (ValidationError, ValueError, TypeError, KeyError) as exc:
        raise ScenarioError(f"{type(exc).__name__}: {exc}") from exc


def _resolve(spec: ScenarioSpec, data: dict, name: str) -> Scenario:
    from .exact import to_fraction

    sc = Scenario(name=name, raw=data)
    for k, s in spec.spaces.items():
        sc.spaces[k] = make_space(s.points, s.weights)
    for k, m in spec.maps.items():
        sc.maps[k] = make_map(_lookup(sc.spaces, m.source, "space"), _lookup(sc.spaces, m.target, "space"), m.assign)
    for k, c in spec.chains.items():
        sc.chains[k] = build_chain(_lookup(sc.spaces, c.space, "space"), c.generators)
    for k, b in spec.bundles.items():
        sp = _lookup(sc.spaces, b.space, "space")
        fibers = _fibers(b.fibers, sp)
        names = tuple(b.sections)
        secs = tuple(tuple(_vector(v) for v in b.sections[n]) for n in names)
        sc.bundles[k] = StrongBundle(sp, fibers, secs, names)
    for k, m in spec.modules.items():
        sc.modules[k] = SectionModule(_lookup(sc.bundles, m.bundle, "bundle"), parse_exponent(m.p))
    for k, l in spec.liftings.items():
        sc.liftings[k] = make_lifting(_lookup(sc.spaces, l.space, "space"), l.retraction)
    for k, d in spec.duals.items():
        from .duality import dual_module
        from .pullback import pullback_module

        M = _lookup(sc.modules, d.module, "module")
        if d.map is not None:
            M = pullback_module(_lookup(sc.maps, d.map, "map"), M).module
        D = dual_module(M)
        sc.duals[k] = DualEntry(d.module, d.map, D.element([_vector(v) for v in d.values]))
    for k, f in spec.functions.items():
        sp = _lookup(sc.spaces, f.space, "space")
        if len(f.values) != len(sp):
            raise ScenarioError(f"function {k!r} has {len(f.values)} values on {len(sp)} points")
        sc.functions[k] = tuple(to_fraction(v) for v in f.values)
    return sc


def load_scenario(path) -> Scenario:
    p = Path(path)
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{p}: not valid JSON ({exc})") from None
    return build_scenario(data, name=p.stem)


def bundled_scenario(name: str) -> Scenario:
    """One of the scenarios shipped with the package (``canonical``, ``canonical-null``)."""
    from importlib.resources import files

    text = files("nmforge.data").joinpath(f"{name}.json").read_text(encoding="utf-8")
    return build_scenario(json.loads(text), name=name)


# -- random instances --------------------------------------------------------------------

@dataclass(frozen=True)
class SizeProfile:
    max_points: int = 10
    max_dim: int = 4
    max_nulls: int = 8
    max_denominator: int = 64
    coord_bound: int = 8
    kinds: tuple = ("l1", "l2", "linf", "weighted", "poly")

    def __post_init__(self):
        if self.max_points < 3:
            raise ValidationError("a size profile needs room for at least 3 points")
        if self.max_dim < 1:
            raise ValidationError("fiber dimension bound must be positive")
        if self.max_nulls < 0 or self.coord_bound < 1:
            raise ValidationError("null and coordinate bounds must be nonnegative")
        if self.max_denominator < 1 or self.max_denominator & (self.max_denominator - 1):
            raise ValidationError("denominator bound must be a power of two")


EXACT_PROFILE_KINDS = ("l1", "linf", "weighted", "poly")


def _fiber_spec(rng: random.Random, prof: SizeProfile) -> dict:
    kind = rng.choice(prof.kinds)
    dim = rng.randint(1, prof.max_dim)
    if kind in ("l1", "l2", "linf"):
        return {"kind": "lp", "p": {"l1": "1", "l2": "2", "linf": "inf"}[kind], "dim": dim}
    if kind == "weighted":
        return {"kind": "weighted", "p": rng.choice(["1", "inf"]),
                "weights": [str(Fraction(rng.randint(1, 4), rng.choice([1, 2]))) for _ in range(dim)]}
    dim = min(dim, 3)
    fs = [[1 if i == j else 0 for j in range(dim)] for i in range(dim)]
    for _ in range(rng.randint(1, 2)):
        fs.append([rng.randint(-2, 2) for _ in range(dim)])
    return {"kind": "poly", "functionals": fs}


def generate_instance(seed: int, profile: Optional[SizeProfile] = None) -> dict:
    """A random scenario document; measure preservation holds by construction.

    ``X`` gets the fiber sums of the ``Y`` weights, so a point of ``X`` is
    null exactly when its preimage carries no mass.
    """
    prof = profile or SizeProfile()
    rng = random.Random(seed)
    n_x = rng.randint(2, max(2, min(4, prof.max_points // 2)))
    n_y = rng.randint(n_x, prof.max_points - n_x)
    ys = [f"y{i}" for i in range(n_y)]
    xs = [f"x{i}" for i in range(n_x)]
    assign = {y: xs[rng.randrange(n_x)] for y in ys}
    denoms = [d for d in (1, 2, 4, 8, 16, 32, 64) if d <= prof.max_denominator]
    budget = prof.max_nulls
    wy = []
    for y in ys:
        if budget > 0 and rng.random() < 0.25:
            wy.append(Fraction(0))
            budget -= 1
        else:
            wy.append(Fraction(rng.randint(1, 8), rng.choice(denoms)))
    if all(w == 0 for w in wy):
        wy[0] = Fraction(1)
    wx = [sum((w for y, w in zip(ys, wy) if assign[y] == x), Fraction(0)) for x in xs]
    # null points of X count against the same budget
    while sum(1 for w in wx if w == 0) + sum(1 for w in wy if w == 0) > prof.max_nulls:
        i = next(i for i, w in enumerate(wy) if w == 0)
        wy[i] = Fraction(1, 2)
        wx = [sum((w for y, w in zip(ys, wy) if assign[y] == x), Fraction(0)) for x in xs]
    fibers = [_fiber_spec(rng, prof) for _ in xs]
    dims = [f["dim"] if "dim" in f else len(f.get("weights") or f["functionals"][0]) for f in fibers]
    b = prof.coord_bound
    sections = {
        f"v{j}": [[rng.randint(-b, b) for _ in range(d)] for d in dims] for j in range(3)
    }
    pos_x = [x for x, w in zip(xs, wx) if w > 0]
    pos_y = [y for y, w in zip(ys, wy) if w > 0]
    retr_x = {x: rng.choice(pos_x) for x, w in zip(xs, wx) if w == 0}
    gens_y = [rng.sample(ys, rng.randint(1, len(ys))) for _ in range(rng.randint(0, 2))]
    gens_y += [[y] for y in rng.sample(pos_y, len(pos_y))]
    gens_x = [[x] for x in rng.sample(pos_x, len(pos_x))]
    omega = [[rng.randint(-b, b) for _ in range(dims[xs.index(assign[y])])] for y in ys]
    doc = {
        "spaces": {
            "X": {"points": xs, "weights": [str(w) for w in wx]},
            "Y": {"points": ys, "weights": [str(w) for w in wy]},
        },
        "maps": {"phi": {"source": "Y", "target": "X", "assign": assign}},
        "chains": {"cX": {"space": "X", "generators": gens_x}, "cY": {"space": "Y", "generators": gens_y}},
        "bundles": {"B": {"space": "X", "fibers": fibers, "sections": sections}},
        "modules": {"M": {"bundle": "B", "p": "2"}},
        "liftings": {"lX": {"space": "X", "retraction": retr_x}},
        "duals": {"omega": {"module": "M", "map": "phi", "values": omega}},
        "functions": {
            "f": {"space": "X", "values": [str(Fraction(rng.randint(-b, b), rng.choice(denoms))) for _ in xs]},
            "g": {"space": "Y", "values": [str(Fraction(rng.randint(-b, b), rng.choice(denoms))) for _ in ys]},
        },
    }
    return doc


def generate_scenario(seed: int, profile: Optional[SizeProfile] = None) -> Scenario:
    return build_scenario(generate_instance(seed, profile), name=f"seed-{seed}")
