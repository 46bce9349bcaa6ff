"""JSON/CSV serialization and atomic file output."""
from __future__ import annotations

import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import DegeneracyError, MalformedInputError
from .fans import Fan, TypeCone
from .geometry import Polytope
from .tree import ScenarioTree

SCHEMA_VERSION = 1
VERDICTS = ("pass", "fail", "diagnostic-only")


def library_version() -> str:
    from . import __version__

    return __version__


# -- atomic output ---------------------------------------------------------


def write_atomic(path, data: str | bytes) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    raw = data.encode() if isinstance(data, str) else data
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(raw)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, allow_nan=False) + "\n"


def write_json(path, obj) -> Path:
    return write_atomic(path, dumps(obj))


def read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedInputError(f"cannot read {path}: {exc}") from None


def csv_text(header, columns, int_cols=()) -> str:
    """Columns as a CSV table; floats with 17 significant digits."""
    arr = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    fmt = ["%d" if name in int_cols else "%.17g" for name in header]
    buf = io.StringIO()
    np.savetxt(buf, arr, fmt=fmt, delimiter=",", header=",".join(header), comments="")
    return buf.getvalue()


def write_csv(path, header, columns, int_cols=()) -> Path:
    return write_atomic(path, csv_text(header, columns, int_cols))


def read_csv(path) -> tuple[list[str], np.ndarray]:
    lines = Path(path).read_text().splitlines()
    header = lines[0].split(",")
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]]).reshape(-1, len(header))
    return header, data


# -- reports ---------------------------------------------------------------


def make_report(command: str, config: dict, verdicts: dict, tables: dict | None = None,
                wall_clock: float | None = None) -> dict:
    for name, v in verdicts.items():
        if v not in VERDICTS:
            raise ValueError(f"verdict {name!r} must be one of {VERDICTS}, got {v!r}")
    decided = [v for v in verdicts.values() if v != "diagnostic-only"]
    if not decided:
        overall = "diagnostic-only"
    else:
        overall = "pass" if all(v == "pass" for v in decided) else "fail"
    rep = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "library_version": library_version(),
        "config": config,
        "verdict": overall,
        "verdicts": verdicts,
        "tables": tables or {},
    }
    if wall_clock is not None:
        rep["wall_clock_s"] = wall_clock
    return rep


# -- domain objects --------------------------------------------------------


def _matrix(raw, name, cols=None) -> np.ndarray:
    try:
        a = np.array(raw, dtype=float)
    except (TypeError, ValueError):
        raise MalformedInputError(f"{name} must be a numeric matrix") from None
    if a.ndim != 2 or a.shape[0] == 0 or (cols is not None and a.shape[1] != cols):
        raise MalformedInputError(f"{name} has shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise MalformedInputError(f"{name} must be finite")
    return a


def polytope_to_json(P: Polytope) -> dict:
    out = {"dim": P.dim, "vertices": P.vertices.tolist()}
    if P.normals is not None:
        out["normals"] = P.normals.tolist()
        out["offsets"] = P.offsets.tolist()
    return out


def polytope_from_json(raw: dict) -> Polytope:
    if not isinstance(raw, dict) or "vertices" not in raw or "dim" not in raw:
        raise MalformedInputError("polytope JSON needs 'dim' and 'vertices'")
    extra = set(raw) - {"dim", "vertices", "normals", "offsets"}
    if extra:
        raise MalformedInputError(f"unknown polytope keys: {sorted(extra)}")
    d = raw["dim"]
    if isinstance(d, bool) or not isinstance(d, int) or d < 1:
        raise MalformedInputError("dim must be a positive integer")
    return Polytope.from_points(_matrix(raw["vertices"], "vertices", d))


def require_full_dim_2d(P: Polytope) -> Polytope:
    if P.dim != 2:
        raise MalformedInputError(f"expected a planar polytope, got dimension {P.dim}")
    if P.affine_dim() < 2:
        raise DegeneracyError("polytope is lower dimensional; its normal fan is not pointed")
    return P


def fan_to_json(F: Fan) -> dict:
    return {"rays": F.rays.tolist(), "maximal": [list(c) for c in F.maximal]}


def fan_from_json(raw: dict) -> Fan:
    if not isinstance(raw, dict) or set(raw) != {"rays", "maximal"}:
        raise MalformedInputError("fan JSON needs exactly 'rays' and 'maximal'")
    return Fan(_matrix(raw["rays"], "rays"), tuple(tuple(int(j) for j in c) for c in raw["maximal"]))


def type_cone_to_json(tc: TypeCone) -> dict:
    rows = []
    for r, pair in zip(tc.rows, tc.pairs):
        rows.append({"alpha": {str(j): float(a) for j, a in enumerate(r) if a != 0.0},
                     "pair": list(pair)})
    return {"rows": rows, "generators": tc.generators.tolist()}


def type_cone_from_json(raw: dict, n_rays: int | None = None) -> TypeCone:
    try:
        gens = _matrix(raw["generators"], "generators")
        n = gens.shape[0] if n_rays is None else n_rays
        rows, pairs = [], []
        for row in raw["rows"]:
            r = np.zeros(n)
            for j, a in row["alpha"].items():
                r[int(j)] = float(a)
            rows.append(r)
            pairs.append(tuple(int(c) for c in row["pair"]))
    except (KeyError, TypeError, ValueError, IndexError, AttributeError) as exc:
        raise MalformedInputError(f"malformed type cone JSON: {exc}") from None
    return TypeCone(np.array(rows), tuple(pairs), gens)


def tree_to_json(tree: ScenarioTree, xi=None, zeta=None) -> dict:
    out = {"branching": list(tree.branching), "probs": [t.tolist() for t in tree.cond_probs]}
    leaves = {}
    if xi is not None:
        leaves["xi"] = np.asarray(xi).tolist()
    if zeta is not None:
        leaves["zeta"] = np.asarray(zeta).tolist()
    if leaves:
        out["leaves"] = leaves
    return out


def tree_from_json(raw: dict):
    """Returns ``(tree, xi or None, zeta or None)``.

    ``xi`` has shape ``(leaves, n, d)``; ``zeta`` has shape ``(n, leaves)``.
    """
    if not isinstance(raw, dict):
        raise MalformedInputError("tree JSON must be an object")
    extra = set(raw) - {"branching", "probs", "leaves"}
    if extra:
        raise MalformedInputError(f"unknown tree keys: {sorted(extra)}")
    br = raw.get("branching")
    if not isinstance(br, list) or not br:
        raise MalformedInputError("tree needs a nonempty 'branching' list")
    if any(isinstance(b, bool) or not isinstance(b, int) for b in br):
        raise MalformedInputError("branching factors must be integers")
    probs = raw.get("probs")
    if probs is None:
        tree = ScenarioTree.from_levels(br)
    else:
        if not isinstance(probs, list):
            raise MalformedInputError("'probs' must be a list of per-level tables")
        try:
            tree = ScenarioTree(tuple(br), tuple(probs))
        except (TypeError, ValueError) as exc:
            raise MalformedInputError(str(exc)) from None
    leaves = raw.get("leaves", {})
    if not isinstance(leaves, dict) or set(leaves) - {"xi", "zeta"}:
        raise MalformedInputError("'leaves' may only hold 'xi' and 'zeta'")
    xi = zeta = None
    if "xi" in leaves:
        try:
            xi = np.array(leaves["xi"], dtype=float)
        except (TypeError, ValueError):
            raise MalformedInputError("leaves.xi must be numeric") from None
        if xi.ndim != 3 or xi.shape[0] != tree.n_leaves or xi.shape[1] == 0:
            raise MalformedInputError(f"leaves.xi must have shape (leaves={tree.n_leaves}, n, d)")
    if "zeta" in leaves:
        try:
            zeta = np.array(leaves["zeta"], dtype=float)
        except (TypeError, ValueError):
            raise MalformedInputError("leaves.zeta must be numeric") from None
        if zeta.ndim != 2 or zeta.shape[1] != tree.n_leaves or zeta.shape[0] == 0:
            raise MalformedInputError(f"leaves.zeta must have shape (n, leaves={tree.n_leaves})")
    for a in (xi, zeta):
        if a is not None and not np.all(np.isfinite(a)):
            raise MalformedInputError("leaf data must be finite")
    return tree, xi, zeta
