"""Verification suites over scenarios and seeded random instances.

Each suite runs the invariant checks owned by one library module and records
one verdict per check. Report bodies are deterministic; timings are kept
apart from the body.
"""
from __future__ import annotations

import json
import random
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

from . import doob, duality, lifting, module_core, pullback, weakstar
from .errors import UnknownSuite
from .exact import close, leq, power
from .fiber import dual_fiber
from .measure import build_chain
from .module_core import INF, SectionModule, conjugate, parse_exponent, pointwise_norm
from .scenario import Scenario, SizeProfile, generate_scenario


@dataclass(frozen=True)
class Check:
    suite: str
    instance: str
    name: str
    passed: bool
    witness: str = ""


@dataclass
class Report:
    suite: str
    checks: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def body_tsv(self) -> str:
        lines = ["suite\tinstance\tcheck\tverdict\twitness"]
        for c in self.checks:
            lines.append(f"{c.suite}\t{c.instance}\t{c.name}\t{'pass' if c.passed else 'FAIL'}\t{c.witness}")
        return "\n".join(lines) + "\n"

    def body_text(self) -> str:
        n, bad = len(self.checks), len(self.failures())
        out = [f"suite {self.suite}: {n - bad}/{n} checks passed"]
        for c in self.failures():
            out.append(f"  FAIL {c.suite} {c.instance} {c.name} {c.witness}".rstrip())
        return "\n".join(out) + "\n"

    def body_json(self) -> str:
        return json.dumps(
            {"suite": self.suite, "passed": self.passed, "checks": [asdict(c) for c in self.checks]},
            indent=2, sort_keys=True,
        ) + "\n"

    def summary_by_suite(self) -> dict:
        out: dict = {}
        for c in self.checks:
            ok, total = out.get(c.suite, (0, 0))
            out[c.suite] = (ok + c.passed, total + 1)
        return out


class _Recorder:
    def __init__(self, suite: str, instance: str):
        self.suite, self.instance = suite, instance
        self.checks: list[Check] = []

    def add(self, name: str, ok, witness: str = ""):
        self.checks.append(Check(self.suite, self.instance, name, bool(ok), "" if ok else witness))

    def merge(self, prefix: str, results: dict, witness: str = ""):
        for k, ok in results.items():
            if isinstance(ok, bool):
                self.add(f"{prefix}.{k}", ok, witness)


def _rand_fn(rng: random.Random, n: int, lo: int = -8, hi: int = 8, nonneg: bool = False):
    vals = [Fraction(rng.randint(lo, hi), rng.choice((1, 2, 4))) for _ in range(n)]
    return tuple(abs(v) for v in vals) if nonneg else tuple(vals)


def _chain_for(sc: Scenario, space, rng: random.Random):
    c = sc.chain_on(space)
    if c is None:
        order = sorted(space.support)
        rng.shuffle(order)
        c = build_chain(space, [[x] for x in order])
    return c


# -- suites ---------------------------------------------------------------------------

def suite_doob(sc: Scenario, rng: random.Random, p=Fraction(2), samples: int = 4) -> list[Check]:
    """Contraction, tower law, representative recovery and the Rep_p inequalities."""
    r = _Recorder("doob", sc.name)
    p = parse_exponent(p)
    q = conjugate(p)
    for cname, ch in sc.chains.items():
        sp = ch.space
        n = len(sp)
        fs = [f for k, f in sc.functions_on(sp)] + [_rand_fn(rng, n) for _ in range(samples)]
        for i, f in enumerate(fs):
            w = f"chain={cname} f#{i}"
            mart = doob.martingale(ch, f)
            r.add("contraction", all(doob.l1_norm(sp, pk) <= doob.l1_norm(sp, f) for pk in mart), w)
            tower = all(
                sp.ae_equal(doob.cond_exp(ch, j, mart[k]), mart[min(j, k)])
                for j in range(len(ch.levels)) for k in range(len(ch.levels))
            )
            r.add("tower", tower, w)
            if not ch.fully_refining:
                continue
            res = doob.rep(ch, f)
            r.add("rep_recovers_class", sp.ae_equal(res.rep, f), w)
            r.add("leb_full_measure", sp.mass(set(range(n)) - res.leb_set) == 0, w)
            r.add("l1_convergence", all(
                doob.l1_norm(sp, [a - b for a, b in zip(mart[k], f)]) == 0
                for k in range(res.stabilization_level, len(ch.levels))), w)
            g = _rand_fn(rng, n)
            rg = doob.rep(ch, g)
            a, b = Fraction(rng.randint(-3, 3)), Fraction(rng.randint(-3, 3), 2)
            rc = doob.rep(ch, [a * s + b * t for s, t in zip(f, g)])
            common = res.leb_set & rg.leb_set & rc.leb_set
            r.add("rep_linear", all(rc.rep[x] == a * res.rep[x] + b * rg.rep[x] for x in common), w)
            h = tuple(max(s, t) for s, t in zip(f, g))
            rh = doob.rep(ch, h)
            r.add("rep_monotone", all(res.rep[x] <= rh.rep[x] for x in res.leb_set & rh.leb_set), w)
            # null values do not affect the representative on positive-mass points
            f2 = tuple(v + 7 if x in sp.null_points else v for x, v in enumerate(f))
            r.add("rep_ignores_null", sp.ae_equal(doob.rep(ch, f2).rep, res.rep), w)
            # Rep_p subadditivity and Hoelder, at the limit and at every finite level
            fa, ga = [abs(v) for v in f], [abs(v) for v in g]
            comb = [abs(a * s + b * t) for s, t in zip(f, g)]
            lims = [doob.rep_p(ch, p, comb).rep, doob.rep_p(ch, p, fa).rep, doob.rep_p(ch, p, ga).rep]
            sub = all(leq(lims[0][x], abs(a) * lims[1][x] + abs(b) * lims[2][x]) for x in range(n))
            for k in range(len(ch.levels)):
                pc, pf, pg = (doob.level_proxy_p(ch, k, p, u) for u in (comb, fa, ga))
                sub &= all(leq(pc[x], abs(a) * pf[x] + abs(b) * pg[x]) for x in sp.support)
            r.add("rep_p_subadditive", sub, w)
            prod = [s * t for s, t in zip(fa, ga)]
            hol = all(
                leq(doob.rep(ch, prod).rep[x], doob.rep_p(ch, p, fa).rep[x] * doob.rep_p(ch, q, ga).rep[x])
                for x in range(n)
            )
            for k in range(len(ch.levels)):
                lhs = doob.cond_exp(ch, k, prod)
                pf, pg = doob.level_proxy_p(ch, k, p, fa), doob.level_proxy_p(ch, k, q, ga)
                hol &= all(leq(lhs[x], pf[x] * pg[x]) for x in sp.support)
            r.add("rep_holder", hol, w)
    return r.checks


def suite_module_axioms(sc: Scenario, rng: random.Random, p=Fraction(2), samples: int = 4) -> list[Check]:
    r = _Recorder("module-axioms", sc.name)
    for mname, M in sc.modules.items():
        w = f"module={mname}"
        M = M.with_exponent(p)
        sp = M.base
        r.add("test_sections_closed", M.bundle.closure_defect(rng) is None, w)
        els = [M.named(n) for n in M.bundle.names] + [M.random_element(rng) for _ in range(samples)]
        for i, v in enumerate(els):
            u = els[(i + 1) % len(els)]
            nv, nu, ns = pointwise_norm(v), pointwise_norm(u), pointwise_norm(v + u)
            r.add("norm_nonnegative", all(c >= 0 for c in nv) and ((all(c == 0 for c in nv)) == v.is_zero()), w)
            r.add("norm_triangle", all(leq(ns[x], nv[x] + nu[x]) for x in sp.support), w)
            f = _rand_fn(rng, len(sp))
            nf = pointwise_norm(v.multiply(f))
            r.add("norm_homogeneous", all(close(nf[x], abs(f[x]) * nv[x]) for x in sp.support), w)
            # representatives differing on null points give the same element
            alt = [tuple(c + 5 for c in val) if x in sp.null_points else val for x, val in enumerate(v.values)]
            r.add("congruence", M.element(alt) == v and M.element(alt) + u == v + u
                  and M.element(alt).multiply(f) == v.multiply(f), w)
            cut = frozenset(x for x in range(len(sp)) if rng.random() < 0.5)
            rest = frozenset(range(len(sp))) - cut
            pieces = [c for c in (cut, rest) if c]
            glued = module_core.glue(M, pieces, [v if c == cut else u for c in pieces])
            ok = all(module_core.restrict(glued, c) == module_core.restrict(v if c == cut else u, c) for c in pieces)
            ok &= module_core.glue(M, pieces, [module_core.restrict(v, c) for c in pieces]) == v
            r.add("glue_restrict", ok, w)
        ch = _chain_for(sc, sp, rng)
        fib = module_core.fiberize(M, ch, rng=rng)
        for k, ok in fib.checks.items():
            r.add(f"fiberize.{k}", ok, f"{w} witness={fib.witnesses.get(k.split('_')[0], '')}")
    return r.checks


def suite_pullback(sc: Scenario, rng: random.Random, p=Fraction(2), samples: int = 4) -> list[Check]:
    r = _Recorder("pullback", sc.name)
    for mapname, phi in sc.maps.items():
        if not phi.measure_preserving:
            continue
        for mname, M in sc.modules_on(phi.target):
            w = f"map={mapname} module={mname}"
            M = M.with_exponent(p)
            pb = pullback.pullback_module(phi, M, rng=rng)
            r.merge("direct", pb.checks, w)
            ch = _chain_for(sc, M.base, rng)
            pb2 = pullback.pullback_module(phi, M, rng=rng, route="fiberized", chain=ch)
            r.merge("fiberized", pb2.checks, w)
            _, iso_checks = pullback.uniqueness_isomorphism(pb, pb2, rng)
            r.merge("uniqueness", iso_checks, w)
            zero = pb.pull(M.zero())
            r.add("zero_to_zero", zero.is_zero(), w)
        # Bochner sanity instance on the source space
        Y = phi.source
        for kind in ("1", "inf"):
            from .fiber import lp

            fiber = lp(kind, 3)
            vals = [tuple(Fraction(rng.randint(-8, 8)) for _ in range(3)) for _ in range(len(Y))]
            r.add(f"bochner_l{kind}", pullback.bochner_check(Y, fiber, vals, p), f"map={mapname}")
    return r.checks


def suite_dual(sc: Scenario, rng: random.Random, p=Fraction(2), samples: int = 4) -> list[Check]:
    r = _Recorder("dual", sc.name)
    for mname, M in sc.modules.items():
        w = f"module={mname}"
        M = M.with_exponent(p)
        D = duality.dual_module(M)
        r.merge("sections_to_dual", duality.verify_section_duality(D, rng, samples), w)
        r.add("dual_fibers", all(D.module.fibers[x] == dual_fiber(f) for x, f in enumerate(M.fibers)), w)
        r.add("lp_linf_dual", duality.lp_linf_dual_check(M, p, rng), w)
        r.add("zero_functional", all(c == 0 for e in M.basis() for c in D.functional(D.module.zero())(e[2])), w)
    for dname, d in sc.duals.items():
        if d.map is None:
            D = duality.dual_module(sc.modules[d.module].with_exponent(p))
            el = D.element(d.element.values)
            r.add(f"dual_norm_bound[{dname}]", all(
                duality.dual_norm_bound_holds(el, D.predual.random_element(rng)) for _ in range(samples)))
    return r.checks


def _liftings_for(sc: Scenario, phi):
    lx = sc.lifting_on(phi.target) or lifting.make_lifting(phi.target)
    return lx, lifting.compatible_lifting(phi, lx)


def suite_dual_of_pullback(sc: Scenario, rng: random.Random, p=Fraction(2), samples: int = 4) -> list[Check]:
    r = _Recorder("dual-of-pullback", sc.name)
    for mapname, phi in sc.maps.items():
        if not phi.measure_preserving:
            continue
        lx, ly = _liftings_for(sc, phi)
        for mname, M in sc.modules_on(phi.target):
            w = f"map={mapname} module={mname}"
            M = M.with_exponent(p)
            pb = pullback.pullback_module(phi, M, rng=rng)
            chain = _chain_for(sc, phi.source, rng)
            dp = duality.dual_of_pullback(pb, rng=rng, chain=chain, liftings=(lx, ly), samples=samples)
            r.merge("pullback_dual", dp.checks, w)
            # pulled-back dual sections land in the embedded image
            DX = duality.dual_module(M)
            ok_embed = True
            ok_iso = True
            for _ in range(samples):
                eta = DX.random_element(rng)
                omega = dp.dual.element([eta.values[x] for x in phi.assignment])
                F = duality.embed_pullback_dual(pb, eta)
                ok_embed &= all(dp.iso(omega)(g) == F(g) for (_, _, g) in pb.module.basis())
                ok_iso &= weakstar.embedded_is_isometric(pb, eta)
            r.add("embedded_image", ok_embed, w)
            r.add("embedding_isometric", ok_iso, w)
            for dname, d in sc.duals.items():
                if d.map == mapname and d.module == mname:
                    L = dp.iso(d.element)
                    routes = [dp.section_of(L, rt, chain, (lx, ly)) for rt in ("direct", "separable", "lifting")]
                    r.add(f"routes_agree[{dname}]", all(x == d.element for x in routes), w)
    return r.checks


def suite_lifting(sc: Scenario, rng: random.Random, p=Fraction(2), samples: int = 4) -> list[Check]:
    r = _Recorder("lifting", sc.name)
    lifts = dict(sc.liftings)
    for sname, sp in sc.spaces.items():
        if not any(l.space == sp for l in lifts.values()):
            lifts[f"default[{sname}]"] = lifting.make_lifting(sp)
    for lname, ell in lifts.items():
        w = f"lifting={lname}"
        r.merge("axioms", lifting.lifting_axioms(ell, rng), w)
        r.merge("function_laws", lifting.function_lifting_laws(ell, rng), w)
        r.merge("atoms", lifting.atom_checks(ell, rng), w)
        r.merge("scalar_fibers", lifting.scalar_fiber_checks(ell, rng), w)
        for mname, M in sc.modules_on(ell.space):
            wm = f"{w} module={mname}"
            lm = lifting.lift_module(ell, M)
            r.merge("lifted_module", lifting.lifted_module_checks(lm, rng), wm)
            f = _rand_fn(rng, len(ell.space))
            for tname, T in (("mult", lifting.multiplication_morphism(M, f)),
                             ("random", _random_morphism(M, rng)),
                             ("zero", lifting.multiplication_morphism(M, [0] * len(f))),
                             ("identity", lifting.multiplication_morphism(M, [1] * len(f)))):
                r.merge(f"lifted_morphism.{tname}", lifting.lifted_morphism_checks(ell, T, rng), wm)
            r.merge("lifted_dual", lifting.dual_via_lifting_checks(ell, M, rng), wm)
    return r.checks


def _random_morphism(M: SectionModule, rng: random.Random):
    mats = tuple(
        tuple(tuple(Fraction(rng.randint(-3, 3)) for _ in range(f.dim)) for _ in range(f.dim))
        for f in M.fibers
    )
    return lifting.Morphism(M, M, mats)


def suite_diagram(sc: Scenario, rng: random.Random, p=Fraction(2), samples: int = 4) -> list[Check]:
    r = _Recorder("diagram", sc.name)
    for mapname, phi in sc.maps.items():
        if not phi.measure_preserving:
            continue
        lx, ly = _liftings_for(sc, phi)
        w = f"map={mapname}"
        r.merge("compatibility", lifting.compatibility_checks(phi, lx, ly, rng), w)
        r.merge("axioms_Y", lifting.lifting_axioms(ly, rng), w)
        for mname, M in sc.modules_on(phi.target):
            res = lifting.pullback_commutes(phi, lx, ly, M, rng)
            res.pop("probes", None)
            r.merge("pullback_square", res, f"{w} module={mname}")
            pb = pullback.pullback_module(phi, M.with_exponent(p), rng=rng)
            dp = duality.dual_of_pullback(pb, rng=rng, liftings=(lx, ly), samples=samples)
            r.add("pullback_dual_lifting.routes_agree", dp.checks["routes_agree"], f"{w} module={mname}")
    return r.checks


def suite_homloc(sc: Scenario, rng: random.Random, p=Fraction(2), samples: int = 4) -> list[Check]:
    r = _Recorder("homloc", sc.name)
    for mapname, phi in sc.maps.items():
        if not phi.absolutely_continuous:
            continue
        for mname, M in sc.modules_on(phi.target):
            pb = pullback.pullback_module(phi, M.with_exponent(p), strict=False, rng=rng)
            r.merge("homloc", duality.verify_homloc(pb, rng, samples), f"map={mapname} module={mname}")
    return r.checks


def suite_weakstar(sc: Scenario, rng: random.Random, p=Fraction(2), samples: int = 4,
                   exponents: Optional[Sequence] = None) -> list[Check]:
    r = _Recorder("weakstar", sc.name)
    p = parse_exponent(p)
    exps = list(exponents) if exponents else sorted({p, conjugate(p)})
    for mapname, phi in sc.maps.items():
        if not phi.measure_preserving:
            continue
        Y, X = phi.source, phi.target
        w = f"map={mapname}"
        laws = True
        jen = True
        for _ in range(samples * 2):
            f, g = _rand_fn(rng, len(Y)), _rand_fn(rng, len(X))
            laws &= all(weakstar.pr_law_checks(phi, f, g).values())
            E = frozenset(y for y in range(len(Y)) if rng.random() < 0.5)
            for e in (1, 2, 3):
                jen &= weakstar.jensen_check(phi, E, f, e)
        r.add("pr_laws", laws, w)
        r.add("pr_jensen", jen, w)
        chain = _chain_for(sc, Y, rng)
        for mname, M in sc.modules_on(X):
            wm = f"{w} module={mname}"
            M = M.with_exponent(p)
            pb = pullback.pullback_module(phi, M, rng=rng)
            Dy = duality.dual_module(pb.module)
            omegas = [d.element for d in sc.duals.values() if d.map == mapname and d.module == mname]
            omegas += [Dy.random_element(rng) for _ in range(2)]
            probes = [M.named(n) for n in M.bundle.names] + [M.random_element(rng) for _ in range(2)]
            for i, om in enumerate(omegas):
                L = Dy.functional(Dy.element(om.values))
                for e in exps:
                    run = weakstar.approximation_sequence(pb, L, chain, probes, exponent=e)
                    r.add(f"uniform_bound[e={e}]", run.uniform_bound(), f"{wm} omega#{i}")
                    r.add(f"level_jensen[e={e}]", run.jensen(), f"{wm} omega#{i}")
                last = run.levels[-1]
                r.add("gap_vanishes_at_refining_level", all(g == 0 for g in last.gaps), f"{wm} omega#{i}")
                loc = weakstar.localized_functional(pb, L, frozenset(range(len(Y))))
                r.add("localized_bound", weakstar.localized_bound_check(pb, L, Dy.element(om.values), loc, probes), f"{wm} omega#{i}")
            eta = duality.dual_module(M).random_element(rng)
            Lemb = duality.embed_pullback_dual(pb, eta)
            run = weakstar.approximation_sequence(pb, Lemb, chain, probes)
            r.add("embedded_gap_zero", all(g == 0 for rec in run.levels for g in rec.gaps), wm)
    return r.checks


SUITES: dict[str, Callable] = {
    "doob": suite_doob,
    "module-axioms": suite_module_axioms,
    "pullback": suite_pullback,
    "dual": suite_dual,
    "dual-of-pullback": suite_dual_of_pullback,
    "lifting": suite_lifting,
    "diagram": suite_diagram,
    "homloc": suite_homloc,
    "weakstar": suite_weakstar,
}
SUITE_NAMES = tuple(SUITES) + ("all",)


def parse_seed_range(text: str) -> range:
    """``"A..B"`` (inclusive) or a single integer."""
    if ".." in text:
        a, b = text.split("..", 1)
        return range(int(a), int(b) + 1)
    return range(int(text), int(text) + 1)


def run_suite(name: str, scenarios: Scenario | Iterable[Scenario] | range | None = None,
              p=Fraction(2), exponent=None, profile: Optional[SizeProfile] = None,
              seed: int = 0) -> Report:
    """Run suite ``name`` (or ``"all"``) on a scenario, scenarios, or a seed range.

    Raises
    ------
    UnknownSuite
        If ``name`` is not a known suite.
    """
    if name not in SUITE_NAMES:
        raise UnknownSuite(f"unknown suite {name!r}; choose from {', '.join(SUITE_NAMES)}")
    names = list(SUITES) if name == "all" else [name]
    if scenarios is None:
        scenarios = range(1, 2)
    if isinstance(scenarios, Scenario):
        items = [(scenarios, seed)]
    elif isinstance(scenarios, range):
        items = [(generate_scenario(s, profile), s) for s in scenarios]
    else:
        items = [(s, seed) for s in scenarios]
    report = Report(name)
    for suite in names:
        t0 = time.perf_counter()
        for sc, s in items:
            rng = random.Random(f"{suite}:{s}")
            kwargs = {"exponents": [parse_exponent(exponent)]} if (suite == "weakstar" and exponent) else {}
            report.checks.extend(SUITES[suite](sc, rng, parse_exponent(p), **kwargs))
        report.timings[suite] = time.perf_counter() - t0
    return report
