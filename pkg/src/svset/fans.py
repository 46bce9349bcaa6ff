"""Normal fans of planar polytopes, the alpha dependence system and type cones.

Conventions
-----------
Rays are stored unit-normalized and indexed from 0. A planar fan produced
by :func:`normal_fan_2d` lists its rays in the counterclockwise facet order
of :func:`~svset.geometry.v_to_h_2d`; maximal cone ``k`` belongs to vertex
``k`` and is the sector from ray ``k-1`` to ray ``k``.

Type-cone rows are linear functionals on offset vectors ``h`` measured
against *ray representatives*. By default each ray is represented by its
primitive integer vector when it has one (``(1, 1)`` rather than
``(1, 1)/sqrt(2)``), falling back to the unit ray. Any positive rescaling
of the representatives describes the same set of polytopes; the primitive
choice keeps the coefficients small and rational.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Sequence

import numpy as np

from .errors import DegeneracyError, FanError, MalformedInputError
from .geometry import CANON_TOL, DirectionGrid, Polytope, convex_hull_2d, v_to_h_2d

ANGTOL = 1e-8
PIVOT_TOL = 1e-12
TWO_PI = 2 * math.pi


def _angle(v) -> float:
    a = math.atan2(v[1], v[0])
    return a + TWO_PI if a < 0 else a


def _ccw_gap(a: float, b: float) -> float:
    """Counterclockwise angle from direction angle ``a`` to ``b`` in [0, 2pi)."""
    g = (b - a) % TWO_PI
    return 0.0 if g > TWO_PI - 1e-15 else g


def _unit_rows(vectors) -> np.ndarray:
    v = np.array(vectors, dtype=float)
    if v.ndim != 2:
        raise MalformedInputError("expected a 2-d array of vectors")
    n = np.linalg.norm(v, axis=1)
    if np.any(n <= 0) or not np.all(np.isfinite(v)):
        raise MalformedInputError("generators must be finite and nonzero")
    v = v / n[:, None]
    v.setflags(write=False)
    return v


@dataclass(frozen=True, eq=False)
class Cone:
    """Convex conic hull of finitely many unit generators."""

    generators: np.ndarray

    def __post_init__(self):
        g = _unit_rows(self.generators)
        keep = []
        for row in g:
            if not any(np.linalg.norm(row - k) <= CANON_TOL for k in keep):
                keep.append(row)
        object.__setattr__(self, "generators", _unit_rows(keep))

    @property
    def dim(self) -> int:
        return self.generators.shape[1]

    def contains_direction(self, x, strict: bool = False, tol: float = 1e-12) -> bool:
        """Membership for planar cones with at most two generators."""
        x = np.asarray(x, dtype=float)
        G = self.generators
        if G.shape[0] == 1:
            cross = G[0, 0] * x[1] - G[0, 1] * x[0]
            return (not strict) and abs(cross) <= tol and G[0] @ x >= 0
        coef = np.linalg.solve(G[:2].T, x)
        return bool(np.all(coef > tol)) if strict else bool(np.all(coef >= -tol))


@dataclass(frozen=True, eq=False)
class Fan:
    """Finite fan given by rays and the ray-index sets of its maximal cones."""

    rays: np.ndarray
    maximal: tuple

    def __post_init__(self):
        rays = _unit_rows(self.rays) if len(self.rays) else np.zeros((0, 2))
        object.__setattr__(self, "rays", rays)
        cones = tuple(tuple(int(j) for j in c) for c in self.maximal)
        for c in cones:
            if any(j < 0 or j >= len(rays) for j in c):
                raise MalformedInputError(f"maximal cone {c} references a missing ray")
            if len(set(c)) != len(c):
                raise MalformedInputError(f"maximal cone {c} repeats a ray")
        object.__setattr__(self, "maximal", cones)

    @property
    def dim(self) -> int:
        return self.rays.shape[1]

    @property
    def n_rays(self) -> int:
        return self.rays.shape[0]

    # -- planar structure -------------------------------------------------

    def _cone_span(self, cone) -> tuple[float, int | None, int | None]:
        """Angle covered by a planar cone, with its start/end rays when pointed."""
        if len(cone) == 1:
            return 0.0, cone[0], cone[0]
        angs = sorted((_angle(self.rays[j]), j) for j in cone)
        gaps = []
        for i, (a, j) in enumerate(angs):
            b, k = angs[(i + 1) % len(angs)]
            gap = _ccw_gap(a, b) if len(angs) > 1 else TWO_PI
            gaps.append((gap, j, k))
        big, j_end, k_start = max(gaps)
        if big > math.pi + ANGTOL:
            return TWO_PI - big, k_start, j_end
        if abs(big - math.pi) <= ANGTOL:
            return math.pi, None, None
        return TWO_PI, None, None

    def sectors(self) -> list[tuple[int, int, int, float]]:
        """Pointed maximal cones as ``(cone index, start ray, end ray, angle)``,
        sorted counterclockwise by start angle."""
        if self.dim != 2:
            raise FanError("sectors are defined for planar fans")
        out = []
        for ci, cone in enumerate(self.maximal):
            span, s, e = self._cone_span(cone)
            if s is None or len(cone) != 2:
                raise FanError(f"maximal cone {cone} is not a pointed two-ray sector")
            out.append((ci, s, e, span))
        out.sort(key=lambda t: (_angle(self.rays[t[1]]), t[0]))
        return out

    @property
    def is_simplicial(self) -> bool:
        for cone in self.maximal:
            G = self.rays[list(cone)]
            if len(cone) > self.dim or np.linalg.matrix_rank(G, tol=1e-9) < len(cone):
                return False
        return True

    @property
    def is_essential(self) -> bool:
        if self.dim != 2:
            raise FanError("only planar fans are supported")
        if not self.maximal:
            return False
        return all(self._cone_span(c)[1] is not None for c in self.maximal)

    @property
    def is_complete(self) -> bool:
        if self.dim != 2:
            raise FanError("only planar fans are supported")
        if len(self.maximal) == 1:
            return self._cone_span(self.maximal[0])[0] >= TWO_PI - 1e-9
        try:
            secs = self.sectors()
        except FanError:
            return False
        if len(secs) < 2:
            return False
        total = sum(s[3] for s in secs)
        chained = all(secs[i][2] == secs[(i + 1) % len(secs)][1] for i in range(len(secs)))
        return chained and abs(total - TWO_PI) <= 1e-9

    def total_angle(self) -> float:
        return sum(s[3] for s in self.sectors())

    def faces(self) -> list[tuple[int, ...]]:
        """All cones of the fan as ray-index tuples, ``()`` standing for ``{0}``."""
        out = set()
        for cone in self.maximal:
            out.add(tuple(sorted(cone)))
            for j in cone:
                out.add((j,))
        if self.is_essential:
            out.add(())
        return sorted(out, key=lambda c: (len(c), c))


# ---------------------------------------------------------------------------
# normal cones and fans of planar polytopes


def normal_cone_at_vertex_2d(P: Polytope, v, tol: float = 1e-9) -> Cone:
    H = v_to_h_2d(P)
    v = np.asarray(v, dtype=float)
    dist = np.linalg.norm(H.vertices - v, axis=1)
    k = int(np.argmin(dist))
    if dist[k] > tol:
        raise MalformedInputError(f"{v.tolist()} is not a vertex of the polytope")
    m = H.n_vertices
    return Cone(H.normals[[(k - 1) % m, k]])


def normal_fan_2d(P: Polytope) -> Fan:
    """Normal fan of a full-dimensional planar polytope."""
    H = v_to_h_2d(P)
    m = H.n_vertices
    fan = Fan(H.normals, tuple(((k - 1) % m, k) for k in range(m)))
    if abs(fan.total_angle() - TWO_PI) > 1e-9:
        raise DegeneracyError("normal cones do not cover the plane")
    return fan


def match_rays(F1: Fan, F2: Fan, angtol: float = ANGTOL) -> np.ndarray | None:
    """Index map ``perm`` with ``F2.rays[perm[j]] ~ F1.rays[j]``, or None."""
    if F1.dim != F2.dim or F1.n_rays != F2.n_rays:
        return None
    perm = np.full(F1.n_rays, -1)
    used = set()
    for j, r in enumerate(F1.rays):
        # chord form; arccos loses half the digits near zero angle
        chord = np.linalg.norm(F2.rays - r, axis=1)
        ang = 2.0 * np.arcsin(np.clip(chord / 2.0, 0.0, 1.0))
        k = int(np.argmin(ang))
        if ang[k] > angtol or k in used:
            return None
        perm[j] = k
        used.add(k)
    return perm


def fans_equal(F1: Fan, F2: Fan, angtol: float = ANGTOL) -> bool:
    perm = match_rays(F1, F2, angtol)
    if perm is None:
        return False
    mapped = {frozenset(int(perm[j]) for j in c) for c in F1.maximal}
    return mapped == {frozenset(c) for c in F2.maximal} and len(F1.maximal) == len(F2.maximal)


def adjacent_maximal_pairs(F: Fan) -> list[tuple[int, int, tuple[int, ...]]]:
    """Adjacent maximal cones ``(c1, c2, shared rays)`` of a complete planar fan."""
    if F.dim != 2:
        raise FanError("adjacency is implemented for planar fans")
    if not F.is_complete:
        raise FanError("fan is not complete")
    secs = F.sectors()  # raises for non-pointed cones
    out = []
    for i, (c1, _, e1, _) in enumerate(secs):
        c2, s2, _, _ = secs[(i + 1) % len(secs)]
        if c1 == c2:
            continue
        out.append((c1, c2, (e1,)))
    return out


# ---------------------------------------------------------------------------
# alpha system and type cones


def primitive_direction(u, max_entry: int = 10_000, tol: float = 1e-12) -> np.ndarray | None:
    """Primitive integer vector parallel to ``u``, if one with small entries exists."""
    u = np.asarray(u, dtype=float)
    j = int(np.argmax(np.abs(u)))
    ratios = u / u[j]
    fracs = [Fraction(float(r)).limit_denominator(max_entry) for r in ratios]
    if any(abs(float(f) - r) > tol for f, r in zip(fracs, ratios)):
        return None
    lcm = reduce(lambda a, b: a * b // math.gcd(a, b), (f.denominator for f in fracs), 1)
    ints = [int(f * lcm) for f in fracs]
    g = reduce(math.gcd, (abs(i) for i in ints if i), 0) or 1
    ints = [i // g for i in ints]
    if max(abs(i) for i in ints) > max_entry:
        return None
    vec = np.array(ints, dtype=float) * math.copysign(1.0, u[j])
    if np.linalg.norm(vec / np.linalg.norm(vec) - u / np.linalg.norm(u)) > 1e-9:
        return None
    return vec


def ray_representatives(F: Fan, scaling: str = "primitive") -> np.ndarray:
    if scaling == "unit":
        return F.rays.copy()
    if scaling != "primitive":
        raise MalformedInputError(f"unknown ray scaling {scaling!r}")
    reps = []
    for r in F.rays:
        p = primitive_direction(r)
        reps.append(r if p is None else p)
    return np.array(reps)


def _solve(A: np.ndarray, b: np.ndarray, pivot_tol: float = PIVOT_TOL) -> np.ndarray:
    # Gaussian elimination with partial pivoting; refuses near-singular systems
    A = A.astype(float).copy()
    b = b.astype(float).copy()
    n = A.shape[0]
    for col in range(n):
        piv = col + int(np.argmax(np.abs(A[col:, col])))
        if abs(A[piv, col]) <= pivot_tol:
            raise FanError("singular alpha system: generating rays are not in general position")
        if piv != col:
            A[[col, piv]] = A[[piv, col]]
            b[[col, piv]] = b[[piv, col]]
        for r in range(col + 1, n):
            f = A[r, col] / A[col, col]
            A[r, col:] -= f * A[col, col:]
            b[r] -= f * b[col]
    x = np.zeros(n)
    for r in range(n - 1, -1, -1):
        x[r] = (b[r] - A[r, r + 1 :] @ x[r + 1 :]) / A[r, r]
    return x


def alpha_coefficients(F: Fan, c1: int, c2: int, scaling: str = "primitive",
                       generators: np.ndarray | None = None) -> np.ndarray:
    """Coefficients of the linear dependence among the rays of two adjacent
    maximal cones, normalized so the two non-shared coefficients sum to 2.

    Returned as a length-``n_rays`` vector, zero off ``J_c1 | J_c2``.
    """
    d = F.dim
    J1, J2 = set(F.maximal[c1]), set(F.maximal[c2])
    if len(J1) != d or len(J2) != d:
        raise FanError("alpha system needs simplicial full-dimensional cones")
    only1, only2 = J1 - J2, J2 - J1
    if len(only1) != 1 or len(only2) != 1:
        raise FanError(f"cones {c1} and {c2} are not adjacent")
    j1, j2 = only1.pop(), only2.pop()
    gens = ray_representatives(F, scaling) if generators is None else generators
    union = sorted(J1 | J2)
    A = np.zeros((d + 1, d + 1))
    A[:d, :] = gens[union].T
    A[d, union.index(j1)] = 1.0
    A[d, union.index(j2)] = 1.0
    rhs = np.zeros(d + 1)
    rhs[d] = 2.0
    sol = _solve(A, rhs)
    alpha = np.zeros(F.n_rays)
    alpha[union] = sol
    resid = np.linalg.norm(alpha @ gens)
    if resid > 1e-10 * max(1.0, float(np.abs(gens).max())):
        raise FanError(f"alpha system residual {resid:.3e} too large")
    return alpha


@dataclass(frozen=True, eq=False)
class TypeCone:
    """Open polyhedral cone ``{h : rows @ h > 0}`` of admissible offsets.

    ``generators`` are the ray representatives the offsets refer to:
    ``P_h = {x : generators @ x <= h}``.
    """

    rows: np.ndarray
    pairs: tuple
    generators: np.ndarray
    maximal: tuple = field(default=())

    @property
    def n_rays(self) -> int:
        return self.generators.shape[0]

    def evaluate(self, h) -> np.ndarray:
        h = np.asarray(h, dtype=float)
        if h.shape[-1] != self.n_rays:
            raise MalformedInputError(f"offset vector has length {h.shape[-1]}, fan has {self.n_rays} rays")
        return h @ self.rows.T

    def contains(self, h, tol: float = 1e-12):
        vals = self.evaluate(h)
        return np.all(vals > tol, axis=-1)

    def effective_rows(self, tol: float = 1e-10) -> np.ndarray:
        """Rows deduplicated up to positive scaling."""
        out = []
        for r in self.rows:
            u = r / np.linalg.norm(r)
            if not any(np.linalg.norm(u - q) <= tol for q in out):
                out.append(u)
        return np.array(out)


def type_cone(F: Fan, scaling: str = "primitive") -> TypeCone:
    if F.dim != 2:
        raise FanError("type cones are implemented for planar fans")
    if not (F.is_complete and F.is_simplicial and F.is_essential):
        raise FanError("type cone needs a complete, simplicial and essential fan")
    gens = ray_representatives(F, scaling)
    rows, pairs = [], []
    for c1, c2, _ in adjacent_maximal_pairs(F):
        rows.append(alpha_coefficients(F, c1, c2, generators=gens))
        pairs.append(tuple(sorted((c1, c2))))
    rows = np.array(rows)
    rows.setflags(write=False)
    return TypeCone(rows, tuple(pairs), gens, F.maximal)


def is_admissible(F: Fan | TypeCone, h: Sequence[float], tol: float = 1e-12) -> bool:
    tc = F if isinstance(F, TypeCone) else type_cone(F)
    h = np.asarray(h, dtype=float)
    if h.shape != (tc.n_rays,):
        raise MalformedInputError(f"expected {tc.n_rays} offsets, got shape {h.shape}")
    return bool(tc.contains(h, tol))


def polytope_from_offsets(F: Fan, h, scaling: str = "primitive") -> Polytope:
    """Hull of the points where the two supporting lines of each maximal cone meet."""
    gens = ray_representatives(F, scaling)
    h = np.asarray(h, dtype=float)
    pts = []
    for cone in F.maximal:
        a, b = cone
        pts.append(np.linalg.solve(gens[[a, b]], h[[a, b]]))
    return convex_hull_2d(pts)


# ---------------------------------------------------------------------------
# deterministic normal fan test


@dataclass
class FanTestReport:
    verdict: bool
    argmax_ok: bool
    fan_ok: bool | None
    n_directions: int
    witness_direction: list | None = None
    witness_samples: list | None = None
    witness_argmax: list | None = None
    fan_witness_sample: int | None = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _critical_directions(samples: np.ndarray) -> np.ndarray:
    """Edge normals of every sample hull plus one direction inside each gap."""
    angles = []
    for tup in samples:
        P = convex_hull_2d(tup)
        V = P.vertices
        if V.shape[0] == 1:
            continue
        edges = np.roll(V, -1, axis=0) - V
        if V.shape[0] == 2:
            edges = edges[:1]
            normals = np.array([[edges[0, 1], -edges[0, 0]], [-edges[0, 1], edges[0, 0]]])
        else:
            normals = np.column_stack([edges[:, 1], -edges[:, 0]])
        angles.extend(_angle(n) for n in normals)
    if not angles:
        return np.zeros((0, 2))
    a = np.unique(np.round(np.array(angles), 14))
    nxt = np.append(a[1:], a[0] + TWO_PI)
    mids = 0.5 * (a + nxt)
    allang = np.concatenate([a, mids])
    return np.column_stack([np.cos(allang), np.sin(allang)])


def _labeled_cones(tup: np.ndarray, tol: float):
    """Normal fan of a sample hull plus, per maximal cone, the labels sitting at its vertex."""
    P = convex_hull_2d(tup)
    if P.n_vertices < 3:
        return None, None
    fan = normal_fan_2d(P)
    labels = []
    for v in P.vertices:
        labels.append(frozenset(np.flatnonzero(np.linalg.norm(tup - v, axis=1) <= tol).tolist()))
    return fan, labels


def deterministic_fan_test(samples, grid: DirectionGrid | None = None,
                           tol: float = 1e-9) -> FanTestReport:
    """Check that the random polytope ``co(xi^1..xi^n)`` has a deterministic normal fan.

    ``samples`` has shape ``(S, n, d)``: one labeled vertex tuple per outcome.
    Part (a) asks, for every direction, for a label that is a maximizer in
    every sample. In the plane the grid is augmented with all sample edge
    normals and one direction per gap between them, which makes (a) exact.
    Part (b), planar only, compares the labeled normal fans of all sample hulls.
    """
    X = np.asarray(samples, dtype=float)
    if X.ndim != 3:
        raise MalformedInputError("samples must have shape (S, n, d)")
    S, n, d = X.shape
    if S == 0 or n == 0:
        raise MalformedInputError("need at least one sample of at least one vertex")
    if grid is None:
        grid = DirectionGrid.uniform(d)
    dirs = grid.directions
    if d == 2:
        crit = _critical_directions(X)
        if len(crit):
            dirs = np.vstack([dirs, crit])
    scale = max(1.0, float(np.abs(X).max()))
    vals = np.einsum("snd,kd->snk", X, dirs)
    best = vals.max(axis=1, keepdims=True)
    is_max = vals >= best - tol * scale
    common = is_max.all(axis=0)  # (n, K)
    ok_dirs = common.any(axis=0)
    report = FanTestReport(
        verdict=False, argmax_ok=bool(ok_dirs.all()), fan_ok=None, n_directions=int(len(dirs))
    )
    if not report.argmax_ok:
        k = int(np.argmin(ok_dirs))
        report.witness_direction = dirs[k].tolist()
        sets = [np.flatnonzero(is_max[s, :, k]) for s in range(S)]
        for s1 in range(S):
            for s2 in range(s1 + 1, S):
                if not set(sets[s1]) & set(sets[s2]):
                    report.witness_samples = [s1, s2]
                    report.witness_argmax = [sets[s1].tolist(), sets[s2].tolist()]
                    break
            if report.witness_samples:
                break
    if d == 2:
        ref_fan, ref_labels = _labeled_cones(X[0], tol * scale)
        fan_ok = True
        degenerate = ref_fan is None
        for s in range(1, S):
            fan, labels = _labeled_cones(X[s], tol * scale)
            if (fan is None) != degenerate:
                fan_ok = False
            elif fan is not None:
                perm = match_rays(ref_fan, fan)
                if perm is None or not fans_equal(ref_fan, fan):
                    fan_ok = False
                else:
                    lookup = {frozenset(c): lab for c, lab in zip(fan.maximal, labels)}
                    for c, lab in zip(ref_fan.maximal, ref_labels):
                        if lookup.get(frozenset(int(perm[j]) for j in c)) != lab:
                            fan_ok = False
                            break
            if not fan_ok:
                report.fan_witness_sample = s
                break
        report.fan_ok = None if (degenerate and fan_ok) else fan_ok
    report.verdict = report.argmax_ok and report.fan_ok is not False
    return report
