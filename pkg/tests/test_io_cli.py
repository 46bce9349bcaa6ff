import json
import math
import os
import stat
from pathlib import Path

import numpy as np
import pytest

import svset
from svset.cli import main
from svset.config import SimulateConfig, TreeConfig, VerifyConfig
from svset.corpus import QUARTER_TURN, triangle_vertices
from svset.errors import DegeneracyError, MalformedInputError
from svset.fans import type_cone
from svset.geometry import Polytope
from svset.io import (
    csv_text,
    dumps,
    fan_from_json,
    fan_to_json,
    make_report,
    polytope_from_json,
    polytope_to_json,
    read_csv,
    require_full_dim_2d,
    tree_from_json,
    tree_to_json,
    type_cone_from_json,
    type_cone_to_json,
    write_atomic,
)
from svset.simulate import TRIANGLE_FAN
from svset.tree import ScenarioTree

TREES = Path(svset.__file__).parent / "data" / "trees"
SMALL_SIM = ["--samples", "2000", "--steps", "200", "--grid-k", "72"]


def dump(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def run(argv, capsys):
    code = main(argv)
    return code, capsys.readouterr()


# -- configs -----------------------------------------------------------------


def test_config_round_trip(tmp_path):
    cfg = SimulateConfig(seed=3, samples=10, N=20, thin=5)
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg.to_dict()))
    assert SimulateConfig.load(p) == cfg


def test_config_defaults():
    cfg = SimulateConfig()
    assert (cfg.samples, cfg.N, cfg.T, cfg.alpha, cfg.grid_k) == (100_000, 10_000, 1.0, 0.5, 720)
    assert TreeConfig().tol == 1e-7


@pytest.mark.parametrize(
    "raw",
    [{"seeds": 1}, {"samples": 1}, {"grid_k": 7}, {"mode": "levy"}, {"N": 0}, {"alpha": "x"},
     {"correlation": [[1.0]]}, {"samples": 5, "trajectory_samples": 6}, {"seed": -1}],
)
def test_config_rejects(raw):
    with pytest.raises(MalformedInputError):
        SimulateConfig.from_dict(raw)


def test_config_replace_ignores_none():
    cfg = SimulateConfig().replace(seed=None, samples=50)
    assert cfg.seed == 1 and cfg.samples == 50


def test_verify_config_rejects_unknown_suite():
    with pytest.raises(MalformedInputError):
        VerifyConfig(suite="paths")


# -- serialization -----------------------------------------------------------


def test_atomic_write_replaces_and_is_readable(tmp_path):
    p = write_atomic(tmp_path / "sub" / "a.txt", "one")
    write_atomic(p, "two")
    assert p.read_text() == "two"
    assert stat.S_IMODE(os.stat(p).st_mode) == 0o644
    assert [f.name for f in p.parent.iterdir()] == ["a.txt"]


def test_dumps_handles_numpy_and_nonfinite():
    s = dumps({"a": np.arange(2), "b": np.float64(np.inf), "c": np.bool_(True), 1: np.int64(4)})
    assert json.loads(s) == {"a": [0, 1], "b": "inf", "c": True, "1": 4}


def test_csv_full_precision(tmp_path):
    x = np.array([math.pi, 1 / 3, -2.5e-300])
    text = csv_text(["i", "x"], [np.arange(3), x], int_cols=("i",))
    assert text.splitlines()[0] == "i,x"
    p = tmp_path / "t.csv"
    p.write_text(text)
    header, data = read_csv(p)
    assert header == ["i", "x"] and np.array_equal(data[:, 1], x)


def test_report_schema():
    rep = make_report("fan", {"tol": 1}, {"a": "pass", "b": "diagnostic-only"})
    assert rep["schema_version"] == 1 and rep["library_version"] == svset.__version__
    assert rep["verdict"] == "pass" and "wall_clock_s" not in rep
    assert make_report("x", {}, {"a": "diagnostic-only"})["verdict"] == "diagnostic-only"
    assert make_report("x", {}, {"a": "pass", "b": "fail"})["verdict"] == "fail"
    with pytest.raises(ValueError):
        make_report("x", {}, {"a": "maybe"})


def test_polytope_json_round_trip(rng):
    P = Polytope.from_points(rng.normal(size=(7, 2)))
    Q = polytope_from_json(json.loads(dumps(polytope_to_json(P))))
    assert Q.equals(P, tol=0)


@pytest.mark.parametrize("raw", [{"vertices": [[0, 0]]}, {"dim": 2, "vertices": [[0, 0, 1]]},
                                 {"dim": 2, "vertices": [[0, 0]], "color": 1}, {"dim": 0, "vertices": []}])
def test_polytope_json_rejects(raw):
    with pytest.raises(MalformedInputError):
        polytope_from_json(raw)


def test_require_full_dim():
    with pytest.raises(DegeneracyError):
        require_full_dim_2d(Polytope.from_points([[0, 0], [1, 1]]))


def test_fan_and_type_cone_json_round_trip():
    F = fan_from_json(json.loads(dumps(fan_to_json(TRIANGLE_FAN))))
    # rays are renormalized on load
    assert np.allclose(F.rays, TRIANGLE_FAN.rays, rtol=0, atol=1e-15) and F.maximal == TRIANGLE_FAN.maximal
    tc = type_cone(TRIANGLE_FAN)
    raw = json.loads(dumps(type_cone_to_json(tc)))
    assert raw["rows"][0]["alpha"] == {"0": 1.0, "1": 1.0, "2": 1.0}
    back = type_cone_from_json(raw)
    assert np.array_equal(back.rows, tc.rows) and back.pairs == tc.pairs


def test_tree_json_round_trip(rng):
    t = ScenarioTree.from_levels([2, 3], [[0.3, 0.7], [[0.2, 0.3, 0.5], [0.1, 0.1, 0.8]]])
    xi = rng.normal(size=(6, 3, 2))
    zeta = rng.normal(size=(2, 6))
    t2, xi2, z2 = tree_from_json(json.loads(dumps(tree_to_json(t, xi, zeta))))
    assert t2.branching == t.branching and np.array_equal(t2.leaf_probs, t.leaf_probs)
    assert np.array_equal(xi2, xi) and np.array_equal(z2, zeta)


@pytest.mark.parametrize(
    "raw",
    [{"branching": []}, {"branching": [2], "probs": [[0.6, 0.6]]}, {"branching": [2], "extra": 1},
     {"branching": [2], "leaves": {"xi": [[[0, 0]]]}}, {"branching": [2], "leaves": {"eta": []}}, [1, 2]],
)
def test_tree_json_rejects(raw):
    with pytest.raises(MalformedInputError):
        tree_from_json(raw)


def test_tree_json_default_probs():
    t, xi, zeta = tree_from_json({"branching": [2, 2]})
    assert np.allclose(t.leaf_probs, 0.25) and xi is None and zeta is None


# -- command line ------------------------------------------------------------


def test_fan_triangle(tmp_path, capsys):
    f = dump(tmp_path / "p.json", {"dim": 2, "vertices": triangle_vertices([1, 1, 1]).tolist()})
    code, out = run(["fan", f, "--out", str(tmp_path / "o")], capsys)
    assert code == 0
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert rep["tables"]["predicate"] == "1*h1 + 1*h2 + 1*h3 > 0"
    assert rep["verdicts"]["input_admissible"] == "pass"
    assert json.loads((tmp_path / "o" / "type_cone.json").read_text())["rows"]
    assert json.loads(out.out)["verdict"] == "pass"


def test_fan_square(tmp_path, capsys):
    f = dump(tmp_path / "p.json", {"dim": 2, "vertices": [[0, 0], [2, 0], [2, 1], [0, 1]]})
    code, out = run(["fan", f], capsys)
    rep = json.loads(out.out)
    assert code == 0
    assert set(rep["tables"]["predicate"].split(" and ")) == {"1*h1 + 1*h3 > 0", "1*h2 + 1*h4 > 0"}


def test_fan_degenerate_exits_2(tmp_path, capsys):
    f = dump(tmp_path / "p.json", {"dim": 2, "vertices": [[0, 0], [1, 1]]})
    code, out = run(["fan", f], capsys)
    assert code == 2 and "lower dimensional" in out.err


def test_fan_missing_file_exits_2(tmp_path, capsys):
    assert run(["fan", str(tmp_path / "nope.json")], capsys)[0] == 2


def test_tree_shipped_examples(capsys):
    code, out = run(["tree", str(TREES / "deterministic_fan.json")], capsys)
    assert code == 0
    code, out = run(["tree", str(TREES / "rotating_fan.json")], capsys)
    rep = json.loads(out.out)
    assert code == 1
    assert rep["verdicts"] == {"agreement": "pass", "deterministic_fan": "fail", "hull_martingale": "fail"}
    assert rep["tables"]["hull_vs_conditional"]["max_gap"] > 1e-3


@pytest.mark.parametrize("name, want", [("deterministic_fan.json", 0), ("rotating_fan.json", 1)])
def test_tree_audit_mode(name, want, capsys):
    assert run(["tree", str(TREES / name), "--mode", "audit"], capsys)[0] == want


@pytest.mark.parametrize("name", ["deterministic_fan.json", "rotating_fan.json"])
def test_tree_randomization_mode(name, capsys):
    code, out = run(["tree", str(TREES / name), "--mode", "randomization", "--grid-k", "36"], capsys)
    rep = json.loads(out.out)
    assert code == 0 and rep["tables"]["instances"] == 36


def test_tree_randomization_with_zeta(tmp_path, capsys):
    f = dump(tmp_path / "t.json", {"branching": [2], "leaves": {"zeta": [[1, 0], [0, 1]]}})
    code, out = run(["tree", f, "--mode", "randomization"], capsys)
    assert code == 0 and json.loads(out.out)["tables"]["max_discrepancy"] == 0.0


def test_tree_rotating_pair_from_file(tmp_path, capsys):
    tri = triangle_vertices([1.0, 1.0, 1.0])
    t = ScenarioTree.binary(1)
    f = dump(tmp_path / "t.json", tree_to_json(t, np.stack([tri, tri @ QUARTER_TURN.T])))
    assert run(["tree", f], capsys)[0] == 1


@pytest.mark.parametrize("raw", [{"branching": []}, {"branching": [2]}])
def test_tree_bad_input_exits_2(tmp_path, capsys, raw):
    assert run(["tree", dump(tmp_path / "t.json", raw)], capsys)[0] == 2


def test_usage_errors_exit_2(capsys):
    assert run([], capsys)[0] == 2
    assert run(["verify", "paths"], capsys)[0] == 2
    assert run(["tree", "x.json", "--mode", "nope"], capsys)[0] == 2


def test_simulate_small(tmp_path, capsys):
    out = tmp_path / "run"
    code, _ = run(["simulate", *SMALL_SIM, "--out", str(out)], capsys)
    assert code == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == ["config.json", "hypotenuse.csv", "report.json", "right_angle.csv", "triangle.csv"]
    rep = json.loads((out / "report.json").read_text())
    assert rep["verdicts"]["regularity"] == "diagnostic-only"
    assert rep["verdicts"]["rotation_control_detected"] == "pass"
    assert "wall_clock_s" not in rep
    header, tri = read_csv(out / "triangle.csv")
    assert header == ["sample", "t", "vertex_index", "x", "y"]
    assert np.array_equal(tri[:3, 3:], triangle_vertices([1, 1, 1]))
    header, ra = read_csv(out / "right_angle.csv")
    assert np.array_equal(ra[:, 2:], tri[tri[:, 2] == 0][:, 3:])


def test_simulate_alpha_zero_constant_hypotenuse(tmp_path, capsys):
    out = tmp_path / "run"
    code, _ = run(["simulate", *SMALL_SIM, "--alpha", "0", "--out", str(out)], capsys)
    assert code == 0
    _, hyp = read_csv(out / "hypotenuse.csv")
    assert np.all(hyp[:, 2] == hyp[0, 2])
    assert hyp[0, 2] == pytest.approx(3 * math.sqrt(2), rel=1e-15)


def test_simulate_config_file_and_timing(tmp_path, capsys):
    cfg = dump(tmp_path / "c.json", {"samples": 500, "N": 50, "grid_k": 36, "seed": 4, "trajectory_samples": 2})
    out = tmp_path / "run"
    code, _ = run(["simulate", "--config", cfg, "--out", str(out), "--timing"], capsys)
    rep = json.loads((out / "report.json").read_text())
    assert code in (0, 1) and rep["wall_clock_s"] > 0
    assert rep["config"]["seed"] == 4
    _, hyp = read_csv(out / "hypotenuse.csv")
    assert set(hyp[:, 0].tolist()) == {0.0, 1.0}


def test_simulate_bad_config_exits_2(tmp_path, capsys):
    cfg = dump(tmp_path / "c.json", {"sample": 500})
    assert run(["simulate", "--config", cfg, "--out", str(tmp_path / "o")], capsys)[0] == 2


def test_verify_geometry(tmp_path, capsys):
    code, out = run(["verify", "geometry", "--out", str(tmp_path)], capsys)
    rep = json.loads((tmp_path / "report.json").read_text())
    assert code == 0 and rep["verdict"] == "pass"
    assert all(k.startswith("geometry.") for k in rep["verdicts"])
