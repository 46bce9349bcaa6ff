"""Monte Carlo layer: the random-triangle process, trajectory integrals,
finite-integrand set-valued integral snapshots and the statistical tests
run on them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .corpus import QUARTER_TURN, triangle_vertices
from .errors import AdmissibilityError, MalformedInputError
from .fans import Fan, type_cone
from .geometry import DirectionGrid, Polytope, hausdorff_2d_batch
from .paths import PathEnsemble
from .rng import chunked, ordered_map, substream

THRESHOLD = 4.0
# standard errors below this many ulps of the data are rounding, not sampling noise
NOISE_ULPS = 64
# triangle fan with rays (-1,0), (0,-1), (1,1): offsets are the three exponential martingales
TRIANGLE_FAN = Fan([[-1.0, 0.0], [0.0, -1.0], [1.0, 1.0]], ((0, 1), (1, 2), (0, 2)))
TRIANGLE_TYPE_CONE = type_cone(TRIANGLE_FAN)
INITIAL_TRIANGLE = triangle_vertices([1.0, 1.0, 1.0])
COIN_COMPONENT = 1 << 32


@dataclass(frozen=True, eq=False)
class PolytopeTrajectory:
    """Per-sample, per-time labeled vertex tuples, shape ``(S, T, n, d)``."""

    times: np.ndarray
    vertices: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 4 or v.shape[1] != t.shape[0]:
            raise MalformedInputError("vertices must have shape (samples, len(times), n, d)")
        if np.any(np.diff(t) <= 0):
            raise MalformedInputError("time grid must be strictly increasing")
        if np.any(np.abs(v[:, 0] - v[:1, 0]) > 1e-12):
            raise MalformedInputError("initial slice must be deterministic")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "vertices", v)

    @property
    def samples(self) -> int:
        return self.vertices.shape[0]

    def polytope(self, sample: int, k: int) -> Polytope:
        return Polytope.from_points(self.vertices[sample, k])


def triangle_process(eta1, eta2, eta3, times) -> PolytopeTrajectory:
    """Random triangle with labeled vertices ``(-e1,-e2), (e2+e3,-e2), (-e1,e1+e3)``.

    Offsets are required to be strictly positive, which keeps every slice in
    the type cone ``e1 + e2 + e3 > 0`` of the triangle fan; both are checked
    at every step.
    """
    eta = np.stack([np.asarray(e, dtype=float) for e in (eta1, eta2, eta3)], axis=-1)
    if eta.ndim == 2:
        eta = eta[None]
    bad_pos = ~np.all(eta > 0, axis=(0, 2))
    bad_tc = ~np.all(TRIANGLE_TYPE_CONE.contains(eta), axis=0)
    bad = bad_pos | bad_tc
    if bad.any():
        k = int(np.argmax(bad))
        raise AdmissibilityError(f"offsets leave the admissible region at time index {k}", time_index=k)
    return PolytopeTrajectory(times, triangle_vertices(eta))


def hypotenuse_length(traj: PolytopeTrajectory) -> np.ndarray:
    """``|xi^2 - xi^3|`` per sample and time."""
    v = traj.vertices
    return np.linalg.norm(v[:, :, 1] - v[:, :, 2], axis=-1)


# ---------------------------------------------------------------------------
# trajectory integrals


@dataclass(frozen=True, eq=False)
class Integrand:
    """Initial value ``x`` and a step-wise constant ``z`` of shape ``(N, d, m)``
    (deterministic) or ``(S, N, d, m)`` (one per sample)."""

    x: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        z = np.asarray(self.z, dtype=float)
        if z.ndim not in (3, 4) or z.shape[-2] != x.shape[0]:
            raise MalformedInputError("z must have shape (N, d, m) or (S, N, d, m) matching x")
        if not np.all(np.isfinite(z)):
            raise MalformedInputError("z must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)

    @property
    def steps(self) -> int:
        return self.z.shape[-3]


def trajectory_integral(integrand: Integrand, increments) -> np.ndarray:
    """Left-point sums ``x + sum_{k < j} z_k dB_k`` for ``j = 0..N``; shape ``(S, N+1, d)``."""
    dB = np.asarray(increments, dtype=float)
    if dB.ndim != 3:
        raise MalformedInputError("increments must have shape (S, N, m)")
    S, N, m = dB.shape
    z = integrand.z
    if z.shape[-3] != N or z.shape[-1] != m or (z.ndim == 4 and z.shape[0] != S):
        raise MalformedInputError(f"integrand grid {z.shape} does not match increments {dB.shape}")
    if z.ndim == 3:
        dJ = np.einsum("kdm,skm->skd", z, dB)
    else:
        dJ = np.einsum("skdm,skm->skd", z, dB)
    J = np.concatenate([np.zeros((S, 1, integrand.x.shape[0])), np.cumsum(dJ, axis=1)], axis=1)
    return J + integrand.x


def finite_integral_snapshot(integrands, increments, step: int, convexify: bool = False):
    """The point set ``{J_t(x^i, z^i)}`` per sample at step index ``step``.

    Returns ``(S, n, d)`` labeled points, or one hull per sample when ``convexify``.
    """
    pts = np.stack([trajectory_integral(f, increments)[:, step] for f in integrands], axis=1)
    if not convexify:
        return pts
    return [Polytope.from_points(p) for p in pts]


def integral_trajectory(integrands, increments, steps=None, dt: float = 1.0) -> PolytopeTrajectory:
    J = np.stack([trajectory_integral(f, increments) for f in integrands], axis=2)
    if steps is None:
        steps = np.arange(J.shape[1])
    return PolytopeTrajectory(np.asarray(steps) * dt, J[:, steps])


def triangle_integrands(eta_paths, alpha: float, dt: float) -> list[Integrand]:
    """Integrands whose walk-driven integrals are the exact discrete triangle martingale.

    ``eta_paths`` holds the discrete exponential martingales, shape ``(S, N+1, 3)``;
    each obeys ``d eta_i = eta_i tanh(alpha sqrt(dt)) / sqrt(dt) dB^i`` on a
    ``+-sqrt(dt)`` walk.
    """
    eta = np.asarray(eta_paths, dtype=float)
    S, N1, _ = eta.shape
    g = math.tanh(alpha * math.sqrt(dt)) / math.sqrt(dt)
    e = eta[:, :-1] * g  # (S, N, 3)
    z = np.zeros((3, S, N1 - 1, 2, 3))
    # vertex 1 = (-e1, -e2)
    z[0, ..., 0, 0] = -e[..., 0]
    z[0, ..., 1, 1] = -e[..., 1]
    # vertex 2 = (e2 + e3, -e2)
    z[1, ..., 0, 1] = e[..., 1]
    z[1, ..., 0, 2] = e[..., 2]
    z[1, ..., 1, 1] = -e[..., 1]
    # vertex 3 = (-e1, e1 + e3)
    z[2, ..., 0, 0] = -e[..., 0]
    z[2, ..., 1, 0] = e[..., 0]
    z[2, ..., 1, 2] = e[..., 2]
    x0 = triangle_vertices(eta[0, 0])
    return [Integrand(x0[i], z[i]) for i in range(3)]


# ---------------------------------------------------------------------------
# diagnostics and tests


def path_regularity_report(traj: PolytopeTrajectory) -> dict:
    """Hausdorff increments along each sample path. Diagnostics only.

    Returns the per-sample maximal one-step increment, a modulus table
    ``lag -> max_k h(P_{t_k}, P_{t_{k+lag}})`` over dyadic lags, and the
    summability statistic ``sum_i (|x^i|^2 + E[realized quadratic variation of vertex i])``.
    """
    V = traj.vertices
    S, T, n, d = V.shape
    if T < 2:
        raise MalformedInputError("need at least two time points")
    if d != 2:
        raise MalformedInputError("path diagnostics are implemented for planar trajectories")

    def lag_max(lag):
        a = V[:, :-lag].reshape(-1, n, d)
        b = V[:, lag:].reshape(-1, n, d)
        return hausdorff_2d_batch(a, b).reshape(S, T - lag).max(axis=1)

    lags = [2**j for j in range(int(math.log2(T - 1)) + 1)]
    table = {lag: lag_max(lag) for lag in lags}
    qv = np.sum(np.sum(np.diff(V, axis=1) ** 2, axis=-1), axis=1)  # (S, n)
    x0 = V[0, 0]
    summability = float(np.sum(np.sum(x0**2, axis=-1) + qv.mean(axis=0)))
    return {
        "verdict": "diagnostic-only",
        "samples": S,
        "time_points": T,
        "max_increment": table[1].tolist(),
        "modulus": [
            {"lag": lag, "dt": float(traj.times[lag] - traj.times[0]),
             "mean_max": float(v.mean()), "max_max": float(v.max())}
            for lag, v in table.items()
        ],
        "summability": summability,
    }


def _zscores(diff, se, scale):
    floor = NOISE_ULPS * np.finfo(float).eps * np.maximum(scale, 1.0)
    return diff / np.maximum(se, floor)


@dataclass
class SupremumReport:
    directions: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    stderr: np.ndarray
    z: np.ndarray
    samples: int
    threshold: float = THRESHOLD
    verdict: str = ""
    witness: dict = field(default_factory=dict)

    def to_dict(self, tables: bool = True) -> dict:
        out = {
            "verdict": self.verdict,
            "samples": self.samples,
            "threshold": self.threshold,
            "directions": len(self.z),
            "max_abs_z": float(np.max(np.abs(self.z))),
            "witness": self.witness,
        }
        if tables:
            out["table"] = {
                "direction": self.directions.tolist(),
                "lhs": self.lhs.tolist(),
                "rhs": self.rhs.tolist(),
                "stderr": self.stderr.tolist(),
                "z": self.z.tolist(),
            }
        return out


def mc_supremum_test(xi, x0, grid: DirectionGrid, threshold: float = THRESHOLD,
                     chunk: int = 48) -> SupremumReport:
    """Compare ``E[max_i <u, xi^i>]`` with ``max_i <u, x^i>`` on every grid direction.

    ``xi`` has shape ``(S, n, d)``, ``x0`` shape ``(n, d)``.
    """
    X = np.asarray(xi, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    S, n, d = X.shape
    if x0.shape != (n, d) or grid.dim != d:
        raise MalformedInputError("initial points or grid do not match the selections")
    U = grid.directions
    lhs, se, scale = [], [], []
    for r in chunked(len(U), chunk):
        vals = np.max(np.einsum("snd,kd->snk", X, U[r.start:r.stop]), axis=1)
        lhs.append(vals.mean(axis=0))
        se.append(vals.std(axis=0, ddof=1) / math.sqrt(S) if S > 1 else np.zeros(vals.shape[1]))
        scale.append(np.abs(vals).max(axis=0))
    lhs = np.concatenate(lhs)
    se = np.concatenate(se)
    rhs = np.max(x0 @ U.T, axis=0)
    diff = lhs - rhs
    z = _zscores(diff, se, np.maximum(np.concatenate(scale), np.abs(rhs)))
    if np.all(np.abs(z) <= threshold):
        verdict = "consistent with martingale"
    elif np.any(z > threshold):
        verdict = "strict submartingale"
    else:
        verdict = "inconclusive"
    k = int(np.argmax(z))
    witness = {"direction": U[k].tolist(), "z": float(z[k]), "excess": float(diff[k]), "stderr": float(se[k])}
    return SupremumReport(U, lhs, rhs, se, z, S, threshold, verdict, witness)


def vertex_mean_test(xi, x0, threshold: float = THRESHOLD) -> dict:
    """Per-vertex, per-coordinate sample means against the initial vertices."""
    X = np.asarray(xi, dtype=float)
    S = X.shape[0]
    mean = X.mean(axis=0)
    se = X.std(axis=0, ddof=1) / math.sqrt(S)
    z = _zscores(mean - np.asarray(x0), se, np.abs(X).max(axis=0))
    return {
        "verdict": "pass" if np.all(np.abs(z) <= threshold) else "fail",
        "mean": mean.tolist(),
        "initial": np.asarray(x0).tolist(),
        "stderr": se.tolist(),
        "z": z.tolist(),
        "max_abs_z": float(np.max(np.abs(z))),
    }


def support_trend_test(snapshots, grid: DirectionGrid, threshold: float = THRESHOLD) -> dict:
    """Check that ``t -> E[s(u, co snapshot_t)]`` is nondecreasing up to noise.

    ``snapshots`` has shape ``(C, S, n, d)`` (checkpoints, samples, labels,
    dimension). Consecutive checkpoints are compared with paired differences
    on the same paths; a drop counts only beyond ``threshold`` standard errors.
    """
    Y = np.asarray(snapshots, dtype=float)
    C, S, n, d = Y.shape
    s = np.max(np.einsum("csnd,kd->csnk", Y, grid.directions), axis=2)  # (C, S, K)
    means = s.mean(axis=1)
    diffs = np.diff(s, axis=0)
    dmean = diffs.mean(axis=1)
    dse = diffs.std(axis=1, ddof=1) / math.sqrt(S)
    zdrop = _zscores(dmean, dse, np.abs(s).max(axis=1)[1:])
    ok = zdrop >= -threshold
    worst = np.unravel_index(int(np.argmin(zdrop)), zdrop.shape)
    return {
        "verdict": "pass" if ok.all() else "fail",
        "checkpoints": C,
        "directions": int(grid.directions.shape[0]),
        "min_z": float(zdrop[worst]),
        "worst": {"pair": int(worst[0]), "direction": grid.directions[worst[1]].tolist()},
        "mean_support": means.tolist(),
    }


# ---------------------------------------------------------------------------
# terminal selections of the triangle family and its controls


def triangle_terminal(ens: PathEnsemble, alpha: float, idx=None) -> np.ndarray:
    """Labeled triangle vertices at ``T``, shape ``(S, 3, 2)``."""
    BT = ens.terminal(idx)
    eta = np.exp(alpha * BT - 0.5 * alpha * alpha * ens.T)
    return triangle_vertices(eta)


def coins(ens: PathEnsemble, idx=None) -> np.ndarray:
    """Independent fair coins, one per sample, from a dedicated substream."""
    idx = ens._indices(idx)

    def work(chunk):
        return [substream(ens.seed, int(idx[s]), COIN_COMPONENT).random() < 0.5 for s in chunk]

    parts = ordered_map(work, chunked(len(idx), 4096))
    return np.array([c for p in parts for c in p], dtype=bool)


def rotation_control(xi, flips) -> tuple[np.ndarray, np.ndarray]:
    """Quarter-turn the whole labeled triangle on samples where ``flips``.

    Returns the perturbed selections and their exact means (fair coin,
    offsets with mean one).
    """
    X = np.array(xi, dtype=float)
    X[flips] = X[flips] @ QUARTER_TURN.T
    x0 = 0.5 * (INITIAL_TRIANGLE + INITIAL_TRIANGLE @ QUARTER_TURN.T)
    return X, x0


def label_swap_control(xi, flips) -> tuple[np.ndarray, np.ndarray]:
    """Swap the labels of the first two vertices on samples where ``flips``."""
    X = np.array(xi, dtype=float)
    X[flips, 0], X[flips, 1] = X[flips, 1].copy(), X[flips, 0].copy()
    v = INITIAL_TRIANGLE
    mid = 0.5 * (v[0] + v[1])
    return X, np.array([mid, mid, v[2]])
