"""Finite-dimensional normed fibers and their duals.

Three norm families are supported: ``lp`` (p in {1, 2, inf}), ``weighted``
variants of those, and ``poly`` norms ``v -> max_i |<g_i, v>|`` generated by
finitely many functionals. Everything except the Euclidean families is exact.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, ValidationError
from .exact import dot, is_exact, power, rank, root, solve, to_fraction

Vector = tuple

MAX_POLY_DIM = 6
_P_VALUES = ("1", "2", "inf")


@dataclass(frozen=True, eq=False)
class FiberSpace:
    """A normed space ``R^dim``.

    Parameters
    ----------
    dim : int
        Dimension of the fiber.
    kind : {"lp", "weighted", "poly"}
    p : {"1", "2", "inf"}
        Exponent for the ``lp`` and ``weighted`` families.
    weights : tuple of Fraction
        Positive coordinate weights (``weighted`` only). The norms are
        ``sum w_i |v_i|``, ``sqrt(sum w_i v_i^2)`` and ``max w_i |v_i|``.
    functionals : tuple of vectors
        Generating functionals of a ``poly`` norm; they must span the dual.
    """

    dim: int
    kind: str = "lp"
    p: str = "2"
    weights: tuple = ()
    functionals: tuple = ()

    def __post_init__(self):
        if not isinstance(self.dim, int) or self.dim < 1:
            raise ValidationError("fiber dimension must be a positive integer")
        if self.kind not in ("lp", "weighted", "poly"):
            raise ValidationError(f"unknown norm kind {self.kind!r}")
        if self.kind in ("lp", "weighted") and self.p not in _P_VALUES:
            raise ValidationError(f"p must be one of {_P_VALUES}, got {self.p!r}")
        if self.kind == "weighted":
            if len(self.weights) != self.dim or any(w <= 0 for w in self.weights):
                raise ValidationError("weighted norms need dim positive weights")
        if self.kind == "poly":
            if self.dim > MAX_POLY_DIM:
                raise ValidationError(f"polyhedral fibers are limited to dim <= {MAX_POLY_DIM}")
            if any(len(g) != self.dim for g in self.functionals):
                raise ValidationError("functional length differs from fiber dimension")
            if rank(self.functionals) != self.dim:
                raise ValidationError("polyhedral functionals do not span the dual")

    def _key(self):
        return (self.dim, self.kind, self.p, self.weights, self.functionals)

    # equality is by norm data, so a dual fiber equals a plain fiber of the same shape
    def __eq__(self, other):
        if not isinstance(other, FiberSpace):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    # -- evaluation ----------------------------------------------------------

    def _check(self, v):
        if len(v) != self.dim:
            raise DimensionMismatch(f"vector of length {len(v)} in a fiber of dim {self.dim}")

    @property
    def is_polyhedral(self) -> bool:
        return self.kind == "poly" or self.p in ("1", "inf")

    def _weights(self):
        return self.weights if self.kind == "weighted" else (Fraction(1),) * self.dim

    def norm(self, v: Sequence):
        self._check(v)
        if self.kind == "poly":
            return max(abs(dot(g, v)) for g in self.functionals)
        w = self._weights()
        if self.p == "1":
            return sum((wi * abs(vi) for wi, vi in zip(w, v)), Fraction(0))
        if self.p == "inf":
            return max(wi * abs(vi) for wi, vi in zip(w, v))
        return root(self._square(v), 2)

    def _square(self, v):
        return sum((wi * vi * vi for wi, vi in zip(self._weights(), v)), Fraction(0))

    def norm_power(self, v: Sequence, e):
        """``norm(v) ** e``, kept exact for Euclidean norms and even ``e``."""
        e = Fraction(e)
        if self.kind != "poly" and self.p == "2" and e.denominator == 1 and e.numerator % 2 == 0:
            self._check(v)
            return self._square(v) ** (e.numerator // 2)
        return power(self.norm(v), e)

    # -- geometry --------------------------------------------------------------

    def ball_vertices(self) -> Optional[tuple]:
        """Vertices of the closed unit ball, or ``None`` if it is not a polytope."""
        return _ball_vertices(self)

    def basis(self) -> list[Vector]:
        return [tuple(Fraction(int(i == j)) for j in range(self.dim)) for i in range(self.dim)]

    def zero(self) -> Vector:
        return (Fraction(0),) * self.dim

    def dual(self) -> "DualFiberSpace":
        return dual_fiber(self)

    def dual_norm(self, w: Sequence):
        """Norm of the functional ``w`` on this space."""
        return dual_fiber(self).norm(w)

    def attainer(self, w: Sequence) -> Vector:
        """A vector ``v`` with ``norm(v) <= 1`` and ``<w, v> = dual_norm(w)``."""
        self._check(w)
        if all(c == 0 for c in w):
            return self.zero()
        verts = self.ball_vertices()
        if verts is not None:
            return max(verts, key=lambda u: dot(w, u))
        a = self._weights()
        scaled = tuple(wi / ai for wi, ai in zip(w, a))
        n = self.dual_norm(w)
        return tuple(c / n for c in scaled)

    def unit_scale(self, v: Sequence) -> Vector:
        """``v`` rescaled into the closed unit ball by a rational factor."""
        from .exact import rational_upper_bound

        n = self.norm(v)
        if n == 0:
            return tuple(v)
        n = rational_upper_bound(n)
        return tuple(c / n for c in v)

    def relabelled(self, perm: Sequence[int], signs: Sequence[int]) -> "FiberSpace":
        """The isometric copy in coordinates ``u_j = signs[j] * v[perm[j]]``."""
        if sorted(perm) != list(range(self.dim)) or len(signs) != self.dim:
            raise ValidationError("not a signed permutation")
        if self.kind == "poly":
            fs = tuple(tuple(signs[j] * g[perm[j]] for j in range(self.dim)) for g in self.functionals)
            return FiberSpace(self.dim, "poly", self.p, (), fs)
        if self.kind == "weighted":
            return FiberSpace(self.dim, "weighted", self.p, tuple(self.weights[k] for k in perm))
        return self

    def spec(self) -> dict:
        if self.kind == "poly":
            return {"kind": "poly", "functionals": [[str(c) for c in g] for g in self.functionals]}
        d = {"kind": self.kind, "p": self.p, "dim": self.dim}
        if self.kind == "weighted":
            d["weights"] = [str(w) for w in self.weights]
        return d

    def describe(self) -> str:
        if self.kind == "poly":
            return f"poly[{len(self.functionals)}](dim {self.dim})"
        prefix = "w" if self.kind == "weighted" else ""
        return f"{prefix}l{self.p}(dim {self.dim})"


@dataclass(frozen=True, eq=False)
class DualFiberSpace(FiberSpace):
    """The dual of ``predual``, carrying the dual norm."""

    predual: Optional[FiberSpace] = field(default=None, compare=False)

    def dual(self) -> FiberSpace:
        return self.predual if self.predual is not None else dual_fiber(self)


def lp(p: str, dim: int) -> FiberSpace:
    return FiberSpace(dim, "lp", str(p))


def weighted(p: str, weights: Sequence) -> FiberSpace:
    w = tuple(to_fraction(x) for x in weights)
    return FiberSpace(len(w), "weighted", str(p), w)


def poly(functionals: Sequence[Sequence]) -> FiberSpace:
    fs = tuple(tuple(to_fraction(c) for c in g) for g in functionals)
    if not fs:
        raise ValidationError("polyhedral norm needs at least one functional")
    return FiberSpace(len(fs[0]), "poly", "inf", (), fs)


@lru_cache(maxsize=None)
def _ball_vertices(f: FiberSpace):
    d = f.dim
    if f.kind == "poly":
        return _polytope_vertices(f.functionals, d)
    if f.p == "2":
        return None
    w = f._weights()
    if f.p == "1":
        out = []
        for i in range(d):
            for s in (1, -1):
                out.append(tuple(Fraction(s) / w[i] if j == i else Fraction(0) for j in range(d)))
        return tuple(out)
    return tuple(
        tuple(Fraction(s) / w[j] for j, s in enumerate(signs))
        for signs in itertools.product((1, -1), repeat=d)
    )


def _polytope_vertices(functionals, d):
    """Vertices of ``{v : |<g, v>| <= 1 for all g}`` by exact enumeration."""
    verts = set()
    for combo in itertools.combinations(range(len(functionals)), d):
        rows = [functionals[i] for i in combo]
        if rank(rows) < d:
            continue
        for signs in itertools.product((1, -1), repeat=d):
            v = solve(rows, [Fraction(s) for s in signs])
            if v is None:
                continue
            if all(abs(dot(g, v)) <= 1 for g in functionals):
                verts.add(v)
    return tuple(sorted(verts))


@lru_cache(maxsize=None)
def dual_fiber(f: FiberSpace) -> FiberSpace:
    """The dual space with the dual norm.

    l1 and l-inf swap, Euclidean norms are self-dual, weights become
    reciprocal, and a polyhedral norm dualizes to the polyhedral norm
    generated by the vertices of its unit ball.
    """
    if isinstance(f, DualFiberSpace) and f.predual is not None:
        # the dual of a dual is the predual at finite dimension
        return f.predual
    if f.kind == "poly":
        return DualFiberSpace(f.dim, "poly", "inf", (), _ball_vertices(f), predual=f)
    swap = {"1": "inf", "inf": "1", "2": "2"}[f.p]
    if f.kind == "weighted":
        return DualFiberSpace(f.dim, "weighted", swap, tuple(1 / w for w in f.weights), predual=f)
    return DualFiberSpace(f.dim, "lp", swap, predual=f)


def norm(fiber: FiberSpace, v: Sequence):
    return fiber.norm(v)


def pair(w: Sequence, v: Sequence):
    """Bilinear pairing of a functional with a vector."""
    if len(w) != len(v):
        raise DimensionMismatch(f"pairing vectors of lengths {len(w)} and {len(v)}")
    return dot(w, v)


def apply_matrix(a: Sequence[Sequence], v: Sequence) -> Vector:
    return tuple(dot(row, v) for row in a)


def transpose(a: Sequence[Sequence], ncols: int) -> list:
    return [[row[j] for row in a] for j in range(ncols)] if a else [[] for _ in range(ncols)]


def operator_norm(a: Sequence[Sequence], source: FiberSpace, target: FiberSpace):
    """``sup |a v|_target`` over the unit ball of ``source``.

    Exact when either side is polyhedral; Euclidean-to-Euclidean falls back on
    the spectral norm in binary64.
    """
    verts = source.ball_vertices()
    if verts is not None:
        return max((target.norm(apply_matrix(a, v)) for v in verts), default=Fraction(0))
    tverts = dual_fiber(target).ball_vertices()
    if tverts is not None:
        at = transpose(a, source.dim)
        return max(
            (source.dual_norm(apply_matrix(at, u)) for u in tverts), default=Fraction(0)
        )
    ws = np.sqrt(np.array([float(x) for x in source._weights()]))
    wt = np.sqrt(np.array([float(x) for x in target._weights()]))
    m = np.array([[float(c) for c in row] for row in a], dtype=float).reshape(target.dim, source.dim)
    m = (wt[:, None] * m) / ws[None, :]
    return float(np.linalg.norm(m, 2)) if m.size else 0.0


def fiber_from_spec(spec: dict) -> FiberSpace:
    kind = spec.get("kind")
    if kind == "lp":
        return lp(str(spec["p"]), int(spec["dim"]))
    if kind == "weighted":
        return weighted(str(spec["p"]), spec["weights"])
    if kind == "poly":
        return poly(spec["functionals"])
    raise ValidationError(f"unknown fiber kind {kind!r}")


def is_exact_fiber(f: FiberSpace) -> bool:
    return f.is_polyhedral


__all__ = [
    "FiberSpace",
    "DualFiberSpace",
    "lp",
    "weighted",
    "poly",
    "dual_fiber",
    "norm",
    "pair",
    "operator_norm",
    "fiber_from_spec",
    "is_exact",
]
