"""Invariant suites behind ``svset verify``.

Each suite returns ``{check name: {"verdict": ..., **details}}``. The suites
are smaller versions of the test-suite checks so they run in seconds.
"""
from __future__ import annotations

import numpy as np

from . import oracles
from .config import SimulateConfig, VerifyConfig
from .corpus import make_corpus, triangle_vertices
from .experiment import run_simulation, run_trend
from .fans import (
    adjacent_maximal_pairs,
    alpha_coefficients,
    deterministic_fan_test,
    fans_equal,
    is_admissible,
    normal_fan_2d,
    ray_representatives,
    type_cone,
)
from .geometry import (
    DirectionGrid,
    Polytope,
    grid_resolution_bound,
    hausdorff_direction_grid,
    hausdorff_distance,
    minkowski_average,
    v_to_h_2d,
)
from .paths import brownian_paths, exponential_martingale
from .simulate import TRIANGLE_FAN, finite_integral_snapshot, triangle_integrands
from .tree import hull_vs_conditional, randomization_identity


def _v(ok: bool, **details) -> dict:
    return {"verdict": "pass" if ok else "fail", **details}


def random_polygon(rng, lo: int = 3, hi: int = 9) -> Polytope:
    k = int(rng.integers(lo, hi))
    pts = rng.normal(size=(k, 2)) * rng.uniform(0.2, 3.0) + rng.normal(size=2)
    return Polytope.from_points(pts)


def geometry_suite(cfg: VerifyConfig) -> dict:
    rng = np.random.default_rng(cfg.seed)
    grid = DirectionGrid.uniform(2, 720)
    worst_exact = worst_gap = 0.0
    order_ok = point_ok = True
    for _ in range(200):
        P, Q = random_polygon(rng), random_polygon(rng)
        h = hausdorff_distance(P, Q)
        ref = oracles.hausdorff_by_vertices(P.vertices, Q.vertices)
        hg = hausdorff_direction_grid(P, Q, grid)
        worst_exact = max(worst_exact, abs(h - ref))
        order_ok &= hg <= h + 1e-12
        worst_gap = max(worst_gap, (h - hg) - grid_resolution_bound(P, Q, grid))
        point_ok &= oracles.point_grid_hausdorff(P.vertices, Q.vertices) <= h + 1e-12
    mk_err = 0.0
    for _ in range(50):
        polys = [random_polygon(rng, 3, 6) for _ in range(int(rng.integers(2, 4)))]
        w = rng.dirichlet(np.ones(len(polys)))
        M = minkowski_average(w, polys)
        R = Polytope.from_points(oracles.minkowski_by_enumeration(w, [p.vertices for p in polys]))
        mk_err = max(mk_err, hausdorff_distance(M, R))
    return {
        "hausdorff_vs_vertex_projection": _v(worst_exact <= cfg.tol, max_abs_diff=worst_exact),
        "grid_below_exact": _v(bool(order_ok)),
        "grid_within_resolution_bound": _v(worst_gap <= 1e-12, worst_excess=worst_gap),
        "point_grid_lower_bound": _v(bool(point_ok)),
        "minkowski_vs_enumeration": _v(mk_err <= cfg.tol, max_hausdorff=mk_err),
    }


def fan_suite(cfg: VerifyConfig) -> dict:
    rng = np.random.default_rng(cfg.seed)
    tc = type_cone(TRIANGLE_FAN)
    eff = tc.effective_rows()
    rows_ok = bool(np.allclose(tc.rows, 1.0) and len(eff) == 1)
    rt_fail = 0
    for _ in range(100):
        h = rng.uniform(-1, 2, size=3)
        if h.sum() <= 0.05:
            rt_fail += is_admissible(tc, h)
            continue
        P = Polytope.from_points(triangle_vertices(h))
        rt_fail += not (is_admissible(tc, h) and fans_equal(normal_fan_2d(v_to_h_2d(P)), TRIANGLE_FAN))
    worst = 0.0
    for _ in range(100):
        F = normal_fan_2d(random_polygon(rng, 3, 8))
        gens = ray_representatives(F, "unit")
        for c1, c2, shared in adjacent_maximal_pairs(F):
            a = alpha_coefficients(F, c1, c2, "unit")
            j1 = (set(F.maximal[c1]) - set(shared)).pop()
            j2 = (set(F.maximal[c2]) - set(shared)).pop()
            ref = oracles.alpha_by_cross_products(gens[j1], gens[shared[0]], gens[j2])
            got = a[[j1, shared[0], j2]] / a[shared[0]]
            worst = max(worst, float(np.abs(got - ref).max()))
    return {
        "triangle_type_cone": _v(rows_ok, rows=tc.rows),
        "type_cone_round_trip": _v(rt_fail == 0, failures=int(rt_fail)),
        "alpha_vs_cross_products": _v(worst <= 1e-9, max_abs_diff=worst),
    }


def tree_suite(cfg: VerifyConfig) -> dict:
    agree = 0
    det_gap, rot_gap = 0.0, np.inf
    cases = make_corpus()
    for case in cases:
        fan = deterministic_fan_test(case.selections)
        hull = hull_vs_conditional(case.tree, case.selections)
        agree += fan.verdict == hull.is_martingale
        if case.kind == "deterministic":
            det_gap = max(det_gap, hull.max_gap)
        else:
            rot_gap = min(rot_gap, hull.max_gap)
    rng = np.random.default_rng(cfg.seed)
    bad = 0
    for _ in range(200):
        n, A = int(rng.integers(1, 5)), int(rng.integers(1, 9))
        p = rng.dirichlet(np.ones(A))
        Z = rng.integers(-3, 4, size=(n, A)).astype(float) if rng.random() < 0.3 else rng.normal(size=(n, A))
        res = randomization_identity(p, Z)
        best, opts = oracles.best_partitions(p, Z)
        bad += abs(best - res.partition_value) > 1e-12 or tuple(res.partition.tolist()) not in opts
    return {
        "corpus_equivalence": _v(agree == len(cases), agree=agree, cases=len(cases)),
        "deterministic_gap": _v(det_gap <= 1e-9, max_gap=det_gap),
        "rotated_gap": _v(rot_gap >= 1e-3, min_gap=rot_gap),
        "randomization_vs_enumeration": _v(bad == 0, failures=int(bad)),
    }


def mc_suite(cfg: VerifyConfig) -> dict:
    rep, _ = run_simulation(SimulateConfig(seed=cfg.seed, samples=cfg.samples, N=1000))
    ens = brownian_paths(3, 1000, 1.0, "walk", cfg.seed, 8)
    B = ens.paths()
    eta = exponential_martingale(B, ens.times, 0.5, walk_dt=ens.dt)
    snap = finite_integral_snapshot(triangle_integrands(eta, 0.5, ens.dt), np.diff(B, axis=1), ens.N)
    err = float(np.abs(snap - triangle_vertices(eta[:, -1])).max())
    trend = run_trend(cfg.seed, samples=min(cfg.samples, 10_000))
    out = {name: {"verdict": v} for name, v in rep["verdicts"].items()}
    out["snapshot_equals_triangle"] = _v(err <= cfg.tol, max_abs_diff=err)
    out["support_trend"] = {"verdict": trend["verdict"], "min_z": trend["min_z"]}
    return out


SUITES = {"geometry": geometry_suite, "fan": fan_suite, "tree": tree_suite, "mc": mc_suite}


def run_suite(cfg: VerifyConfig) -> dict:
    names = list(SUITES) if cfg.suite == "all" else [cfg.suite]
    return {name: SUITES[name](cfg) for name in names}
