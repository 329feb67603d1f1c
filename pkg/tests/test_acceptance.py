"""Acceptance criteria, one test per criterion.

Each test records a single PASS/FAIL line (with its runtime and check count);
the lines are printed at the end of the pytest session and also when this
file is run as a script.
"""
from __future__ import annotations

import random
import time
from fractions import Fraction

from nmforge.duality import dual_module
from nmforge.fiber import lp, poly
from nmforge.harness import run_suite
from nmforge.lifting import lifting_axioms, make_lifting
from nmforge.measure import make_space
from nmforge.pullback import bochner_instance, bochner_norm_power, pullback_module
from nmforge.module_core import lp_module_norm_power
from nmforge.scenario import bundled_scenario, generate_scenario
from nmforge.weakstar import approximation_sequence, jensen_check, pr_law_checks

SEEDS = range(1, 101)
RESULTS: list[str] = []


def _record(n: int, title: str, ok: bool, elapsed: float, detail: str = "") -> None:
    line = f"criterion {n} [{'PASS' if ok else 'FAIL'}] {title} ({elapsed:.2f}s{', ' + detail if detail else ''})"
    RESULTS.append(line)
    print(line)


def _select(report, names=None, prefixes=()):
    return [c for c in report.checks
            if (names is None or c.name in names) and (not prefixes or c.name.startswith(prefixes))]


def _failed(checks):
    return [f"{c.instance}:{c.name}" for c in checks if not c.passed][:5]


def test_criterion_1_doob_suite():
    names = {"contraction", "tower", "rep_recovers_class", "leb_full_measure", "l1_convergence"}
    t = time.perf_counter()
    report = run_suite("doob", SEEDS)
    elapsed = time.perf_counter() - t
    checks = _select(report, names)
    sizes = [max(len(s) for s in generate_scenario(k).spaces.values()) for k in SEEDS]
    ok = bool(checks) and not _failed(checks) and elapsed < 10 and max(sizes) <= 10
    _record(1, "P_k contraction, tower law, Rep recovers the class, Leb has full measure", ok,
            elapsed, f"{len(checks)} checks")
    assert max(sizes) <= 10
    assert not _failed(checks), _failed(checks)
    assert elapsed < 10


def test_criterion_2_rep_p_inequalities():
    names = {"rep_p_subadditive", "rep_holder"}
    t = time.perf_counter()
    report = run_suite("doob", SEEDS, p=2)
    elapsed = time.perf_counter() - t
    checks = _select(report, names)
    ok = bool(checks) and not _failed(checks) and elapsed < 10
    _record(2, "Rep_p subadditivity and Hoelder bound, p = q = 2, tol 1e-9", ok, elapsed,
            f"{len(checks)} checks")
    assert checks and not _failed(checks), _failed(checks)
    assert elapsed < 10


def test_criterion_3_module_realization():
    t = time.perf_counter()
    report = run_suite("module-axioms", SEEDS)
    elapsed = time.perf_counter() - t
    checks = _select(report, prefixes=("fiberize.",))
    wanted = {"fiberize.rep_bijective", "fiberize.rep_preserves_pointwise_norm",
              "fiberize.decomposition_infimum_matches_closed_form"}
    per_instance = {c.instance for c in checks if c.name in wanted}
    ok = not _failed(checks) and len(per_instance) == len(SEEDS)
    _record(3, "v -> [Rep(v)] is a norm-preserving bijection; seminorm = Rep_p(|v|)", ok, elapsed,
            f"{len(checks)} checks")
    assert len(per_instance) == len(SEEDS)
    assert not _failed(checks), _failed(checks)


def _bochner_exact() -> bool:
    rng = random.Random(7)
    S = make_space(["s", "t", "u", "z"], ["1/8", "3/8", "1/2", "0"])
    ok = True
    for fib in (lp("1", 3), lp("inf", 3), poly([[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, -1]])):
        for p in (1, 2, 3):
            pb = bochner_instance(S, fib, p)
            for _ in range(10):
                vals = [tuple(Fraction(rng.randint(-6, 6), rng.randint(1, 4)) for _ in range(3))
                        for _ in range(4)]
                got = lp_module_norm_power(pb.module.element(vals))
                ok &= got == bochner_norm_power(S, fib, vals, p) and isinstance(got, Fraction)
    return ok


def test_criterion_4_pullback():
    names = {"direct.pointwise_norm_identity", "fiberized.pointwise_norm_identity",
             "uniqueness.intertwines", "uniqueness.pointwise_isometric", "uniqueness.bijective",
             "bochner_l1", "bochner_linf"}
    t = time.perf_counter()
    report = run_suite("pullback", SEEDS)
    bochner = _bochner_exact()
    elapsed = time.perf_counter() - t
    checks = _select(report, names)
    ok = bool(checks) and not _failed(checks) and bochner
    _record(4, "|phi*v| = |v| o phi, uniqueness isomorphism, Bochner norm on a one-point base", ok,
            elapsed, f"{len(checks)} checks")
    assert bochner
    assert checks and not _failed(checks), _failed(checks)


def test_criterion_5_duality():
    t = time.perf_counter()
    dual = run_suite("dual", SEEDS)
    dpb = run_suite("dual-of-pullback", SEEDS)
    diagram = run_suite("diagram", SEEDS)
    elapsed = time.perf_counter() - t
    checks = (_select(dual, prefixes=("sections_to_dual.",)) + _select(dpb, prefixes=("pullback_dual.", "routes_agree"))
              + _select(diagram, {"pullback_dual_lifting.routes_agree"}))
    kinds = {c.name for c in checks}
    ok = bool(checks) and not _failed(checks) and "pullback_dual_lifting.routes_agree" in kinds
    _record(5, "I and the pullback-dual isomorphism are bijective and isometric; routes agree", ok,
            elapsed, f"{len(checks)} checks")
    assert "pullback_dual_lifting.routes_agree" in kinds and "pullback_dual.routes_agree" in kinds
    assert not _failed(checks), _failed(checks)


def test_criterion_6_lifting():
    t = time.perf_counter()
    lifting = run_suite("lifting", SEEDS)
    diagram = run_suite("diagram", SEEDS)
    # a carrier at the exhaustive limit
    S = make_space([f"p{i}" for i in range(12)], ["1/8"] * 8 + [0] * 4)
    big = lifting_axioms(make_lifting(S, {"p8": "p0", "p9": "p0", "p10": "p3", "p11": "p7"}, check=False))
    elapsed = time.perf_counter() - t
    checks = (_select(lifting, prefixes=("axioms.", "atoms.", "lifted_module.", "lifted_morphism."))
              + _select(diagram, prefixes=("axioms_Y.", "pullback_square.", "compatibility.")))
    ok = not _failed(checks) and all(big.values()) and elapsed < 30
    _record(6, "lifting axioms, lifted norm identities, quotient round trip, atoms, pullback square",
            ok, elapsed, f"{len(checks)} checks")
    assert all(big.values()), big
    assert not _failed(checks), _failed(checks)
    assert elapsed < 30


def test_criterion_7_homloc():
    t = time.perf_counter()
    report = run_suite("homloc", SEEDS)
    elapsed = time.perf_counter() - t
    checks = _select(report, prefixes=("homloc.",))
    ok = bool(checks) and not _failed(checks)
    _record(7, "homloc_iso is a norm-preserving bijection inverted by extend_local_operator", ok,
            elapsed, f"{len(checks)} checks")
    assert checks and not _failed(checks), _failed(checks)


def _pr_laws_random(count: int = 200) -> bool:
    rng = random.Random(2024)
    ok = True
    for k in range(count):
        phi = generate_scenario(1 + k % 100).maps["phi"]
        Y, X = phi.source, phi.target
        f = tuple(Fraction(rng.randint(-9, 9), rng.randint(1, 8)) for _ in range(len(Y)))
        g = tuple(Fraction(rng.randint(-9, 9), rng.randint(1, 8)) for _ in range(len(X)))
        E = frozenset(y for y in range(len(Y)) if rng.random() < 0.5)
        ok &= all(pr_law_checks(phi, f, g).values())
        ok &= all(jensen_check(phi, E, f, p) for p in (1, 2, 3))
    return ok


def _canonical_gaps() -> bool:
    sc = bundled_scenario("canonical")
    M = sc.modules["M"]
    pb = pullback_module(sc.maps["phi"], M)
    Dy = dual_module(pb.module)
    L = Dy.functional(Dy.element(sc.duals["omega"].element.values))
    run = approximation_sequence(pb, L, sc.chains["cY"], [M.named("v")])
    return run.gaps[0] == (Fraction(1, 4),) and run.gaps[-1] == (0,)


def test_criterion_8_weakstar():
    t = time.perf_counter()
    laws = _pr_laws_random()
    gaps = _canonical_gaps()
    elapsed_direct = time.perf_counter() - t
    t = time.perf_counter()
    # p = 3 makes the two exponents p and q distinct
    report = run_suite("weakstar", SEEDS, p=3)
    elapsed = time.perf_counter() - t
    checks = report.checks
    bound_kinds = {c.name for c in checks if c.name.startswith("uniform_bound")}
    ok = (laws and gaps and not _failed(checks) and elapsed < 20
          and bound_kinds == {"uniform_bound[e=3]", "uniform_bound[e=3/2]"})
    _record(8, "Pr laws and Jensen on 200 draws; canonical gaps 1/4 then 0; uniform bound, e in {p, q}",
            ok, elapsed + elapsed_direct, f"suite {elapsed:.2f}s, {len(checks)} checks")
    assert laws and gaps
    assert bound_kinds == {"uniform_bound[e=3]", "uniform_bound[e=3/2]"}
    assert not _failed(checks), _failed(checks)
    assert elapsed < 20


if __name__ == "__main__":
    import sys

    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
