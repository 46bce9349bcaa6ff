"""``svset`` command line: fan, tree, simulate, verify.

Exit codes: 0 pass, 1 verdict failure, 2 usage or input error.
"""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from .config import SUITES, TREE_MODES, FanConfig, SimulateConfig, TreeConfig, VerifyConfig
from .errors import (
    DegeneracyError,
    EnumerationGuardError,
    FanError,
    MalformedInputError,
    NumericalFailureError,
)
from .experiment import run_simulation
from .fans import deterministic_fan_test, normal_fan_2d, type_cone
from .geometry import DirectionGrid, Polytope, v_to_h_2d
from .io import (
    dumps,
    fan_to_json,
    make_report,
    polytope_from_json,
    polytope_to_json,
    read_json,
    require_full_dim_2d,
    tree_from_json,
    type_cone_to_json,
    write_atomic,
    write_json,
)
from .tree import cond_expect_vector, hull_vs_conditional, martingale_audit, randomization_identity
from .verify import run_suite

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _emit(report: dict, out: str | None, name: str = "report.json") -> int:
    if out is not None:
        write_json(Path(out) / name, report)
    summary = {k: report[k] for k in ("command", "verdict", "verdicts") if k in report}
    if out is None:
        summary = report
    sys.stdout.write(dumps(summary))
    return EXIT_PASS if report["verdict"] in ("pass", "diagnostic-only") else EXIT_FAIL


def _predicate(rows) -> str:
    terms = []
    for r in rows:
        parts = [f"{a:g}*h{j + 1}" for j, a in enumerate(r) if a != 0.0]
        terms.append(" + ".join(parts) + " > 0")
    return " and ".join(terms)


def cmd_fan(args) -> int:
    cfg = FanConfig(**({"tol": args.tol} if args.tol is not None else {}))
    P = require_full_dim_2d(polytope_from_json(read_json(args.file)))
    H = v_to_h_2d(P)
    F = normal_fan_2d(H)
    tables = {"polytope": polytope_to_json(H), "fan": fan_to_json(F)}
    verdicts = {}
    try:
        tc = type_cone(F, cfg.scaling)
    except FanError as exc:
        tables["type_cone_error"] = str(exc)
        verdicts["type_cone"] = "fail"
    else:
        eff = tc.effective_rows(cfg.tol)
        h = H.offsets * np.linalg.norm(tc.generators, axis=1)
        tables["type_cone"] = type_cone_to_json(tc)
        tables["effective_rows"] = eff
        tables["predicate"] = _predicate(np.round(eff / np.abs(eff).max(axis=1, keepdims=True), 12))
        tables["offsets"] = h
        verdicts["input_admissible"] = "pass" if bool(tc.contains(h)) else "fail"
    if args.out is not None:
        write_json(Path(args.out) / "fan.json", tables["fan"])
        if "type_cone" in tables:
            write_json(Path(args.out) / "type_cone.json", tables["type_cone"])
    return _emit(make_report("fan", cfg.to_dict(), verdicts, tables), args.out)


def _hull_process(tree, xi):
    return [[Polytope.from_points(p) for p in cond_expect_vector(tree, xi, k)] for k in range(tree.depth + 1)]


def cmd_tree(args) -> int:
    raw = {"mode": args.mode}
    if args.tol is not None:
        raw["tol"] = args.tol
    if args.grid_k is not None:
        raw["grid_k"] = args.grid_k
    cfg = TreeConfig(**raw)
    tree, xi, zeta = tree_from_json(read_json(args.file))
    tables, verdicts = {}, {}
    if cfg.mode in ("audit", "equivalence") and xi is None:
        raise MalformedInputError(f"mode {cfg.mode!r} needs leaves.xi")
    if cfg.mode == "audit":
        rep = martingale_audit(tree, _hull_process(tree, xi), cfg.tol)
        tables["audit"] = rep.to_dict()
        verdicts["martingale"] = "pass" if rep.verdict == "martingale" else "fail"
    elif cfg.mode == "equivalence":
        fan = deterministic_fan_test(xi)
        hull = hull_vs_conditional(tree, xi, cfg.tol)
        tables["fan_test"] = fan.to_dict()
        tables["hull_vs_conditional"] = hull.to_dict()
        tables["agreement"] = bool(fan.verdict) == hull.is_martingale
        verdicts["agreement"] = "pass" if tables["agreement"] else "fail"
        verdicts["deterministic_fan"] = "pass" if fan.verdict else "fail"
        verdicts["hull_martingale"] = "pass" if hull.is_martingale else "fail"
    else:
        probs = tree.leaf_probs
        if zeta is not None:
            Zs = [zeta]
        elif xi is not None:
            dirs = DirectionGrid.uniform(xi.shape[2], cfg.grid_k).directions
            Zs = list(np.einsum("lnd,kd->knl", xi, dirs))
        else:
            raise MalformedInputError("randomization mode needs leaves.zeta or leaves.xi")
        worst, failures = 0.0, 0
        for Z in Zs:
            try:
                worst = max(worst, randomization_identity(probs, Z).discrepancy)
            except NumericalFailureError:
                failures += 1
        tables["instances"] = len(Zs)
        tables["max_discrepancy"] = worst
        tables["failures"] = failures
        verdicts["randomization"] = "pass" if failures == 0 else "fail"
    return _emit(make_report("tree", cfg.to_dict(), verdicts, tables), args.out)


def cmd_simulate(args) -> int:
    cfg = SimulateConfig.load(args.config) if args.config else SimulateConfig()
    cfg = cfg.replace(seed=args.seed, samples=args.samples, N=args.steps, alpha=args.alpha,
                      grid_k=args.grid_k, mode=args.mode, thin=args.thin, tol=args.tol)
    t0 = time.perf_counter()
    report, files = run_simulation(cfg)
    if args.timing:
        report["wall_clock_s"] = time.perf_counter() - t0
    out = Path(args.out)
    for name, text in files.items():
        write_atomic(out / name, text)
    write_json(out / "config.json", cfg.to_dict())
    report["outputs"] = sorted([*files, "config.json", "report.json"])
    return _emit(report, args.out)


def cmd_verify(args) -> int:
    raw = {"suite": args.suite}
    for key in ("seed", "samples", "tol"):
        if getattr(args, key) is not None:
            raw[key] = getattr(args, key)
    cfg = VerifyConfig(**raw)
    t0 = time.perf_counter()
    results = run_suite(cfg)
    verdicts = {f"{s}.{c}": v["verdict"] for s, checks in results.items() for c, v in checks.items()}
    report = make_report("verify", cfg.to_dict(), verdicts, results,
                         time.perf_counter() - t0 if args.timing else None)
    return _emit(report, args.out)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="svset", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fan", help="normal fan and type cone of a planar polytope")
    f.add_argument("file")
    f.add_argument("--tol", type=float)
    f.add_argument("--out")
    f.set_defaults(func=cmd_fan)

    t = sub.add_parser("tree", help="scenario-tree audits")
    t.add_argument("file")
    t.add_argument("--mode", choices=TREE_MODES, default="equivalence")
    t.add_argument("--tol", type=float)
    t.add_argument("--grid-k", type=int)
    t.add_argument("--out")
    t.set_defaults(func=cmd_tree)

    s = sub.add_parser("simulate", help="random-triangle Monte Carlo experiment")
    s.add_argument("--config")
    s.add_argument("--seed", type=int)
    s.add_argument("--samples", type=int)
    s.add_argument("--steps", type=int)
    s.add_argument("--alpha", type=float)
    s.add_argument("--grid-k", type=int)
    s.add_argument("--mode", choices=("walk", "gauss"))
    s.add_argument("--thin", type=int)
    s.add_argument("--tol", type=float)
    s.add_argument("--out", default="svset-out")
    s.add_argument("--timing", action="store_true", help="record wall-clock time in the report")
    s.set_defaults(func=cmd_simulate)

    v = sub.add_parser("verify", help="run invariant suites")
    v.add_argument("suite", choices=SUITES)
    v.add_argument("--seed", type=int)
    v.add_argument("--samples", type=int)
    v.add_argument("--tol", type=float)
    v.add_argument("--out")
    v.add_argument("--timing", action="store_true")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (MalformedInputError, DegeneracyError, EnumerationGuardError) as exc:
        sys.stderr.write(f"svset {args.command}: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
