"""Command line entry point ``nmforge``."""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import doob, duality, lifting, pullback, weakstar
from .errors import NMForgeError, ScenarioError
from .harness import SUITE_NAMES, parse_seed_range, run_suite
from .module_core import lp_module_norm, parse_exponent, pointwise_norm
from .scenario import Scenario, bundled_scenario, generate_instance, load_scenario


def fmt(x) -> str:
    if isinstance(x, (Fraction, int)):
        return str(x)
    return f"{x:.12g}"


def fmt_vec(v) -> str:
    return "(" + ", ".join(fmt(c) for c in v) + ")"


def _scenario(arg: str) -> Scenario:
    if Path(arg).exists():
        return load_scenario(arg)
    if arg in ("canonical", "canonical-null"):
        return bundled_scenario(arg)
    raise ScenarioError(f"no scenario file {arg!r}")


def _pick(table: dict, name, kind: str):
    if name is None:
        if len(table) != 1:
            raise ScenarioError(f"scenario has {len(table)} {kind}s; name one")
        return next(iter(table.items()))
    if name not in table:
        raise ScenarioError(f"unknown {kind} {name!r}")
    return name, table[name]


def _write(out, name: str, text: str):
    if out is None:
        sys.stdout.write(text)
        return
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text, encoding="utf-8")
    sys.stdout.write(text)


# -- subcommands ------------------------------------------------------------------------

def cmd_verify(args) -> int:
    if args.scenario:
        target = _scenario(args.scenario)
    else:
        target = parse_seed_range(args.seeds)
    report = run_suite(args.suite, target, p=args.p, exponent=args.exponent)
    body = {"text": report.body_text, "json": report.body_json, "tsv": report.body_tsv}[args.format]()
    _write(None, "", body)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "verify.tsv").write_text(report.body_tsv(), encoding="utf-8")
        from .plots import plot_verify

        plot_verify(report, out / "verify.png")
    if args.timings:
        for k, v in report.timings.items():
            sys.stderr.write(f"{k}\t{v:.3f}s\n")
    return 0 if report.passed else 1


def cmd_rep(args) -> int:
    sc = _scenario(args.scenario)
    fname, f = _pick(sc.functions, args.function, "function")
    space = sc.spaces[sc.raw["functions"][fname]["space"]]
    if args.chain:
        _, ch = _pick(sc.chains, args.chain, "chain")
    else:
        ch = sc.chain_on(space)
        if ch is None:
            raise ScenarioError(f"no refining chain on the space of {fname!r}")
    if args.p is None:
        res = doob.rep(ch, f)
    else:
        res = doob.rep_p(ch, parse_exponent(args.p), [abs(v) for v in f])
    lines = ["point\tvalue\tin_leb"]
    for x, lab in enumerate(space.points):
        lines.append(f"{lab}\t{fmt(res.rep[x])}\t{int(x in res.leb_set)}")
    lines.append(f"# stabilization_level\t{res.stabilization_level}")
    if args.p is not None:
        lines.append("")
        lines.append("level\t" + "\t".join(space.points))
        for k in range(len(ch.levels)):
            proxy = doob.level_proxy_p(ch, k, parse_exponent(args.p), [abs(v) for v in f])
            lines.append(f"{k}\t" + "\t".join(fmt(c) for c in proxy))
    print("\n".join(lines))
    return 0


def cmd_pullback(args) -> int:
    sc = _scenario(args.scenario)
    mname, M = _pick(sc.modules, args.module, "module")
    maps = {k: m for k, m in sc.maps.items() if m.target == M.base}
    mapname, phi = _pick(maps, args.map, "map")
    pb = pullback.pullback_module(phi, M)
    Y = phi.source
    print("point\timage\tfiber")
    for y, lab in enumerate(Y.points):
        print(f"{lab}\t{phi.target.points[phi(y)]}\t{pb.module.fibers[y].describe()}")
    print()
    print("section\tpoint\t|phi*v|\t|v|o phi")
    for n in M.bundle.names:
        v = M.named(n)
        lhs, rhs = pointwise_norm(pb.pull(v)), phi.compose_function(pointwise_norm(v))
        for y, lab in enumerate(Y.points):
            print(f"{n}\t{lab}\t{fmt(lhs[y])}\t{fmt(rhs[y] if Y.is_positive(y) else 0)}")
    print()
    for k, ok in pb.checks.items():
        print(f"# {k}\t{'pass' if ok else 'FAIL'}")
    return 0 if all(pb.checks.values()) else 1


def cmd_dual(args) -> int:
    sc = _scenario(args.scenario)
    mname, M = _pick(sc.modules, args.module, "module")
    M = M.with_exponent(args.p) if args.p else M
    D = duality.dual_module(M)
    print(f"# dual exponent q = {fmt(D.q)}")
    print("point\tfiber\tdual_fiber")
    for x, lab in enumerate(M.base.points):
        print(f"{lab}\t{M.fibers[x].describe()}\t{D.module.fibers[x].describe()}")
    for dname, d in sc.duals.items():
        if d.module == mname and d.map is None:
            el = D.element(d.element.values)
            pn = pointwise_norm(el)
            print()
            print(f"functional\tpoint\tomega\t|omega|")
            for x, lab in enumerate(M.base.points):
                print(f"{dname}\t{lab}\t{fmt_vec(el.values[x])}\t{fmt(pn[x])}")
            for n in M.bundle.names:
                print(f"# <{dname}, {n}>\t{fmt_vec(D.functional(el)(M.named(n)))}")
    import random

    checks = duality.verify_section_duality(D, random.Random(0))
    for k, ok in checks.items():
        print(f"# {k}\t{'pass' if ok else 'FAIL'}")
    return 0 if all(checks.values()) else 1


def cmd_dual_of_pullback(args) -> int:
    sc = _scenario(args.scenario)
    mname, M = _pick(sc.modules, args.module, "module")
    maps = {k: m for k, m in sc.maps.items() if m.target == M.base}
    mapname, phi = _pick(maps, args.map, "map")
    lx = sc.lifting_on(phi.target) or lifting.make_lifting(phi.target)
    ly = lifting.compatible_lifting(phi, lx)
    pb = pullback.pullback_module(phi, M)
    chain = sc.chain_on(phi.source)
    dp = duality.dual_of_pullback(pb, chain=chain, liftings=(lx, ly))
    Y = phi.source
    for dname, d in sc.duals.items():
        if d.map != mapname or d.module != mname:
            continue
        L = dp.iso(d.element)
        pn = pointwise_norm(d.element)
        print("functional\tpoint\tomega\t|omega|\tseparable\tlifting")
        sep = dp.section_of(L, "separable", chain)
        lif = dp.section_of(L, "lifting", liftings=(lx, ly))
        for y, lab in enumerate(Y.points):
            print(f"{dname}\t{lab}\t{fmt_vec(d.element.values[y])}\t{fmt(pn[y])}\t"
                  f"{fmt_vec(sep.values[y])}\t{fmt_vec(lif.values[y])}")
        for n in M.bundle.names:
            print(f"# I({dname})(phi*{n})\t{fmt_vec(L(pb.pull(M.named(n))))}")
        print()
    for k, ok in dp.checks.items():
        print(f"# {k}\t{'pass' if ok else 'FAIL'}")
    return 0 if all(dp.checks.values()) else 1


def cmd_lift(args) -> int:
    import random

    sc = _scenario(args.scenario)
    rng = random.Random(0)
    lname, ell = _pick(sc.liftings, args.lifting, "lifting")
    sp = ell.space
    checks: dict = {}
    if args.what == "atoms":
        print("atom\tmembers")
        for a, A in zip(sorted(sp.support), lifting.lifted_atoms(ell)):
            print(f"{sp.points[a]}\t{','.join(sp.labels(A))}")
        checks.update(lifting.lifting_axioms(ell))
        checks.update(lifting.atom_checks(ell, rng))
    elif args.what == "module":
        mname, M = _pick(dict(sc.modules_on(sp)), args.module, "module")
        lm = lifting.lift_module(ell, M)
        print("section\tpoint\tretract\tl(v)\t|l(v)|")
        for n in M.bundle.names:
            lv = lm.lift(M.named(n))
            pn = pointwise_norm(lv)
            for x, lab in enumerate(sp.points):
                print(f"{n}\t{lab}\t{sp.points[ell.retraction[x]]}\t{fmt_vec(lv.values[x])}\t{fmt(pn[x])}")
        checks.update(lifting.lifted_module_checks(lm, rng))
    elif args.what == "morphism":
        mname, M = _pick(dict(sc.modules_on(sp)), args.module, "module")
        fname, f = _pick({k: v for k, v in sc.functions_on(sp)}, args.function, "function")
        T = lifting.multiplication_morphism(M, f)
        lT, _, _ = lifting.lift_morphism(ell, T)
        print("point\t|T|\tl(|T|)\t|lT|")
        a, b = T.pointwise_norm(), lT.pointwise_norm()
        la = ell.lift_function(a)
        for x, lab in enumerate(sp.points):
            print(f"{lab}\t{fmt(a[x])}\t{fmt(la[x])}\t{fmt(b[x])}")
        checks.update(lifting.lifted_morphism_checks(ell, T, rng))
    else:
        mname, M = _pick(dict(sc.modules_on(sp)), args.module, "module")
        maps = {k: m for k, m in sc.maps.items() if m.target == sp}
        mapname, phi = _pick(maps, args.map, "map")
        ly = lifting.compatible_lifting(phi, ell)
        print("point\tt_Y")
        for y, lab in enumerate(phi.source.points):
            print(f"{lab}\t{phi.source.points[ly.retraction[y]]}")
        res = lifting.pullback_commutes(phi, ell, ly, M, rng)
        print(f"# probes\t{res.pop('probes')}")
        checks.update(res)
        checks.update(lifting.compatibility_checks(phi, ell, ly, rng))
    for k, ok in checks.items():
        print(f"# {k}\t{'pass' if ok else 'FAIL'}")
    return 0 if all(checks.values()) else 1


def cmd_weakstar(args) -> int:
    sc = _scenario(args.scenario)
    mname, M = _pick(sc.modules, args.module, "module")
    maps = {k: m for k, m in sc.maps.items() if m.target == M.base}
    mapname, phi = _pick(maps, args.map, "map")
    pb = pullback.pullback_module(phi, M)
    duals = {k: d for k, d in sc.duals.items() if d.map == mapname and d.module == mname}
    dname, d = _pick(duals, args.dual, "dual")
    L = duality.dual_module(pb.module).functional(d.element)
    chain = sc.chains[args.chain] if args.chain else sc.chain_on(phi.source)
    if chain is None:
        raise ScenarioError("no refining chain on the map's source")
    names = args.probes.split(",") if args.probes else list(M.bundle.names)
    probes = [M.named(n) for n in names]
    run = weakstar.approximation_sequence(pb, L, chain, probes, exponent=args.exponent, levels=args.levels)
    lines = ["level\t" + "\t".join(f"gap[{n}]" for n in names) + "\tint|L_k|^e\tint|L|^e\tbound"]
    for r in run.levels:
        lines.append(
            f"{r.level}\t" + "\t".join(fmt(g) for g in r.gaps)
            + f"\t{fmt(r.integral_lk)}\t{fmt(r.integral_l)}\t{'pass' if r.bound_holds else 'FAIL'}"
        )
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "weakstar.tsv").write_text(text, encoding="utf-8")
        from .plots import plot_weakstar

        plot_weakstar(run, out / "weakstar.png")
    return 0 if run.uniform_bound() and run.jensen() else 1


def cmd_generate(args) -> int:
    doc = generate_instance(args.seed)
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nmforge", description="Normed modules on finite measure spaces.")
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("--suite", required=True, choices=SUITE_NAMES)
    src = v.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario")
    src.add_argument("--seeds", help="seed range A..B")
    v.add_argument("--p", default="2")
    v.add_argument("--exponent")
    v.add_argument("--format", choices=("text", "json", "tsv"), default="text")
    v.add_argument("--out", help="directory for verify.tsv and verify.png")
    v.add_argument("--timings", action="store_true", help="print per-suite timings to stderr")
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("rep", help="representative of a function along a chain")
    r.add_argument("--scenario", required=True)
    r.add_argument("--function")
    r.add_argument("--chain")
    r.add_argument("--p")
    r.set_defaults(func=cmd_rep)

    pb = sub.add_parser("pullback", help="fiber table and norm identity of a pullback")
    pb.add_argument("--scenario", required=True)
    pb.add_argument("--module")
    pb.add_argument("--map")
    pb.set_defaults(func=cmd_pullback)

    d = sub.add_parser("dual", help="fiberwise report of a module dual")
    d.add_argument("--scenario", required=True)
    d.add_argument("--module")
    d.add_argument("--p")
    d.set_defaults(func=cmd_dual)

    dp = sub.add_parser("dual-of-pullback", help="dual of a pullback along all routes")
    dp.add_argument("--scenario", required=True)
    dp.add_argument("--module")
    dp.add_argument("--map")
    dp.set_defaults(func=cmd_dual_of_pullback)

    lf = sub.add_parser("lift", help="liftings, lifted modules and the pullback square")
    lf.add_argument("--scenario", required=True)
    lf.add_argument("--what", choices=("atoms", "module", "morphism", "diagram"), default="atoms")
    lf.add_argument("--lifting")
    lf.add_argument("--module")
    lf.add_argument("--map")
    lf.add_argument("--function")
    lf.set_defaults(func=cmd_lift)

    w = sub.add_parser("weakstar", help="approximating sequence L_k with per-level gaps")
    w.add_argument("--scenario", required=True)
    w.add_argument("--module")
    w.add_argument("--map")
    w.add_argument("--dual")
    w.add_argument("--chain")
    w.add_argument("--levels", type=int)
    w.add_argument("--probes", help="comma separated section names")
    w.add_argument("--exponent")
    w.add_argument("--out", help="directory for weakstar.tsv and weakstar.png")
    w.set_defaults(func=cmd_weakstar)

    g = sub.add_parser("generate", help="write a random scenario")
    g.add_argument("--seed", type=int, default=1)
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NMForgeError as exc:
        sys.stderr.write(f"nmforge: {type(exc).__name__}: {exc}\n")
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
