"""Convex polytopes in vertex representation and the metric operations on them.

Everything here is a pure function of its inputs. Exact combinatorial
routines (hulls, facet representation) are provided for the plane; higher
dimensions are handled through vertex lists, support functions and
direction grids.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial import ConvexHull, QhullError
from scipy.stats import qmc

from .errors import (
    DegeneracyError,
    DimensionMismatchError,
    MalformedInputError,
    NumericalFailureError,
)

# absolute tolerance for vertex deduplication and collinearity
CANON_TOL = 1e-9
DEFAULT_TOL = 1e-10


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _as_points(points, d=None) -> np.ndarray:
    try:
        pts = np.array(points, dtype=float)
    except (TypeError, ValueError) as exc:
        raise MalformedInputError(f"cannot read points: {exc}") from None
    if pts.ndim == 1 and pts.size and d is not None and pts.size == d:
        pts = pts[None, :]
    if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[1] == 0:
        raise MalformedInputError(f"expected a nonempty (n, d) point array, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise MalformedInputError("points must be finite")
    return pts


@dataclass(frozen=True, eq=False)
class Polytope:
    """Compact convex polytope given by its vertices.

    Construct through :meth:`from_points` (or :func:`convex_hull_2d`) to get
    the canonical minimal vertex list. Direct construction trusts the caller.
    ``normals``/``offsets`` are the optional planar facet description
    ``{x : normals @ x <= offsets}``.
    """

    vertices: np.ndarray
    normals: np.ndarray | None = None
    offsets: np.ndarray | None = None

    def __post_init__(self):
        v = _as_points(self.vertices)
        object.__setattr__(self, "vertices", _readonly(v))
        if (self.normals is None) != (self.offsets is None):
            raise MalformedInputError("normals and offsets must be given together")
        if self.normals is not None:
            n = np.array(self.normals, dtype=float)
            h = np.array(self.offsets, dtype=float)
            if n.ndim != 2 or n.shape[1] != v.shape[1] or h.shape != (n.shape[0],):
                raise MalformedInputError("facet block has inconsistent shape")
            object.__setattr__(self, "normals", _readonly(n))
            object.__setattr__(self, "offsets", _readonly(h))

    @classmethod
    def from_points(cls, points) -> "Polytope":
        pts = _as_points(points)
        return cls(canonical_vertices(pts))

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    def affine_dim(self, tol: float = CANON_TOL) -> int:
        if self.n_vertices == 1:
            return 0
        centered = self.vertices - self.vertices[0]
        sv = np.linalg.svd(centered, compute_uv=False)
        return int(np.sum(sv > tol))

    def norm(self) -> float:
        """``h(P, {0})``, the largest vertex norm."""
        return float(np.max(np.linalg.norm(self.vertices, axis=1)))

    def translate(self, shift) -> "Polytope":
        shift = np.asarray(shift, dtype=float)
        if self.normals is None:
            return Polytope(self.vertices + shift)
        return Polytope(self.vertices + shift, self.normals, self.offsets + self.normals @ shift)

    def scale(self, factor: float, center=None) -> "Polytope":
        c = np.zeros(self.dim) if center is None else np.asarray(center, dtype=float)
        v = c + factor * (self.vertices - c)
        if factor > 0:
            return Polytope(v)
        return Polytope.from_points(v)

    def equals(self, other: "Polytope", tol: float = 1e-9) -> bool:
        """Canonical forms coincide vertex by vertex within ``tol``."""
        if self.dim != other.dim or self.n_vertices != other.n_vertices:
            return False
        return bool(np.all(np.abs(self.vertices - other.vertices) <= tol))

    def __repr__(self):
        verts = np.array2string(self.vertices, precision=6, separator=", ")
        return f"Polytope(dim={self.dim}, vertices={verts})"


# ---------------------------------------------------------------------------
# hulls and canonical forms


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _hull_2d(pts: np.ndarray, tol: float = CANON_TOL) -> np.ndarray:
    # Andrew's monotone chain with exact-sign predicates; tolerance is applied
    # afterwards so it can never discard an extreme point
    p = np.unique(pts, axis=0)  # lexicographic order
    if len(p) == 1:
        return p

    def chain(seq):
        out = []
        for q in seq:
            while len(out) >= 2 and _cross(out[-2], out[-1], q) <= 0:
                out.pop()
            out.append(q)
        return out

    lower = chain(p)
    upper = chain(p[::-1])
    hull = lower[:-1] + upper[:-1]

    # merge near-duplicate neighbours, then drop vertices within tol of the
    # chord between their neighbours
    changed = True
    while changed and len(hull) > 2:
        changed = False
        n = len(hull)
        for i in range(n):
            a, b, c = hull[i - 1], hull[i], hull[(i + 1) % n]
            ac = c - a
            base2 = float(ac @ ac)
            if math.dist(a, b) <= tol:
                drop = True
            elif base2 == 0.0:
                drop = False
            else:
                t = float((b - a) @ ac)
                drop = abs(_cross(a, b, c)) <= tol * math.sqrt(base2) and 0.0 <= t <= base2
            if drop:
                del hull[i]
                changed = True
                break
    H = np.array(hull)

    # lower-dimensional inputs collapse to a segment or a point
    c = p.mean(axis=0)
    _, sv, vt = np.linalg.svd(p - c, full_matrices=False)
    width = float(np.max(np.abs((p - c) @ vt[-1]))) if len(sv) > 1 else 0.0
    if len(H) <= 2 or width <= tol:
        proj = (p - c) @ vt[0]
        lo, hi = p[int(np.argmin(proj))], p[int(np.argmax(proj))]
        if math.dist(lo, hi) <= tol:
            return lo[None, :].copy()
        seg = np.array([lo, hi])
        return seg[np.lexsort((seg[:, 1], seg[:, 0]))]
    start = int(np.lexsort((H[:, 1], H[:, 0]))[0])
    return np.roll(H, -start, axis=0)


def _hull_1d(pts: np.ndarray, tol: float = CANON_TOL) -> np.ndarray:
    lo, hi = pts[:, 0].min(), pts[:, 0].max()
    if hi - lo <= tol:
        return np.array([[lo]])
    return np.array([[lo], [hi]])


def _lexsorted(v: np.ndarray) -> np.ndarray:
    return v[np.lexsort(v.T[::-1])]


def _hull_nd(pts: np.ndarray, tol: float = CANON_TOL) -> np.ndarray:
    d = pts.shape[1]
    origin = pts[0]
    centered = pts - origin
    _, sv, vt = np.linalg.svd(centered, full_matrices=False)
    rank = int(np.sum(sv > tol))
    if rank == 0:
        return pts[:1].copy()
    if rank < d:
        # hull inside the affine hull, then lift back
        basis = vt[:rank]
        low = centered @ basis.T
        low_hull = canonical_vertices(low)
        return _lexsorted(origin + low_hull @ basis)
    try:
        hull = ConvexHull(pts)
    except QhullError:
        return _lexsorted(pts)
    return _lexsorted(pts[np.sort(hull.vertices)])


def canonical_vertices(points) -> np.ndarray:
    """Minimal vertex list in canonical order.

    In the plane: counterclockwise from the lexicographically smallest
    vertex. Otherwise: lexicographic order.
    """
    pts = _as_points(points)
    d = pts.shape[1]
    if d == 1:
        return _hull_1d(pts)
    if d == 2:
        return _hull_2d(pts)
    return _hull_nd(pts)


def convex_hull_2d(points) -> Polytope:
    pts = _as_points(points, d=2)
    if pts.shape[1] != 2:
        raise MalformedInputError("convex_hull_2d expects planar points")
    return Polytope(_hull_2d(pts))


def v_to_h_2d(P: Polytope) -> Polytope:
    """Attach the facet description: outward unit normals, counterclockwise.

    Facet ``j`` is the edge from vertex ``j`` to vertex ``j+1``.
    """
    if P.dim != 2:
        raise MalformedInputError("v_to_h_2d needs a planar polytope")
    V = P.vertices
    if V.shape[0] < 3:
        raise DegeneracyError(f"polytope with {V.shape[0]} vertices is not full-dimensional")
    edges = np.roll(V, -1, axis=0) - V
    normals = np.column_stack([edges[:, 1], -edges[:, 0]])
    lengths = np.linalg.norm(normals, axis=1)
    if np.any(lengths <= CANON_TOL):
        raise DegeneracyError("zero-length edge in vertex list")
    normals = normals / lengths[:, None] + 0.0  # no negative zeros
    offsets = np.max(normals @ V.T, axis=1)
    return Polytope(V, normals, offsets)


# ---------------------------------------------------------------------------
# support functions and distances


def support_function(P: Polytope, xstar) -> float | np.ndarray:
    """``max_v <xstar, v>``; ``xstar`` may be one direction or a stack of them."""
    x = np.asarray(xstar, dtype=float)
    if x.shape[-1] != P.dim:
        raise DimensionMismatchError(f"direction has dimension {x.shape[-1]}, polytope {P.dim}")
    vals = np.max(x @ P.vertices.T, axis=-1)
    return float(vals) if x.ndim == 1 else vals


def _affine_min_norm(S: np.ndarray) -> np.ndarray:
    # barycentric weights of the min-norm point of aff(S)
    if S.shape[0] == 1:
        return np.ones(1)
    base = S[0]
    D = (S[1:] - base).T
    mu, *_ = np.linalg.lstsq(D, -base, rcond=None)
    return np.concatenate([[1.0 - mu.sum()], mu])


def min_norm_point(points, tol: float = DEFAULT_TOL, max_iter: int | None = None):
    """Wolfe's algorithm for the point of ``conv(points)`` nearest the origin.

    Returns ``(x, weights, support)`` where ``x = weights @ points[support]``.
    Stops once ``|x| - min_j <x/|x|, p_j> <= tol``, i.e. the distance is
    certified to within ``tol``.
    """
    P = _as_points(points)
    k = P.shape[0]
    if max_iter is None:
        max_iter = 10 * k * k
    scale = max(1.0, float(np.max(np.abs(P))))
    tiny = 1e-14 * scale
    norms2 = np.einsum("ij,ij->i", P, P)
    S = [int(np.argmin(norms2))]
    w = np.ones(1)
    x = P[S[0]].copy()
    best = (0.0, math.sqrt(norms2[S[0]]))
    it = 0
    while True:
        nx = math.sqrt(float(x @ x))
        if nx <= tiny:
            return np.zeros_like(x), w, np.array(S)
        dots = P @ x
        j = int(np.argmin(dots))
        lower = max(0.0, float(dots[j]) / nx)
        best = (max(best[0], lower), min(best[1], nx))
        if nx - lower <= tol:
            return x, w, np.array(S)
        if j in S:
            # no improving vertex left: floating point floor reached. The
            # normalized gap divides rounding error by |x|, so judge the
            # optimality residual |x|^2 - <x, p_j> instead.
            if nx - lower <= max(tol, 1e-12 * scale) or nx * nx - float(dots[j]) <= 1e-13 * scale * scale:
                return x, w, np.array(S)
            raise NumericalFailureError("Wolfe iteration stalled", bound=best)
        S.append(j)
        w = np.append(w, 0.0)
        while True:
            it += 1
            if it > max_iter:
                raise NumericalFailureError(
                    f"no convergence after {max_iter} iterations", bound=best
                )
            idx = np.array(S)
            lam = _affine_min_norm(P[idx])
            if np.all(lam > 1e-15):
                w = lam
                x = lam @ P[idx]
                break
            neg = lam <= 1e-15
            theta = float(np.min(w[neg] / (w[neg] - lam[neg])))
            w = w + theta * (lam - w)
            keep = w > 1e-15
            S = [s for s, kp in zip(S, keep) if kp]
            w = w[keep]
            w = w / w.sum()
            x = w @ P[np.array(S)]
            if len(S) == 1:
                break


def point_distance(x, P: Polytope, tol: float = DEFAULT_TOL) -> float:
    """Euclidean distance from ``x`` to ``P``; 0 when ``x`` lies in ``P``."""
    if tol <= 0:
        raise MalformedInputError("tol must be positive")
    x = np.asarray(x, dtype=float)
    if x.shape != (P.dim,):
        raise DimensionMismatchError(f"point has shape {x.shape}, polytope dimension {P.dim}")
    y, _, _ = min_norm_point(P.vertices - x, tol=tol)
    return float(np.linalg.norm(y))


def _check_same_dim(P: Polytope, Q: Polytope):
    if P.dim != Q.dim:
        raise DimensionMismatchError(f"dimensions differ: {P.dim} vs {Q.dim}")


def hausdorff_distance(P: Polytope, Q: Polytope, tol: float = DEFAULT_TOL) -> float:
    """Hausdorff distance, via vertex-to-polytope projections both ways.

    The distance to a convex set is convex, so the one-sided excess is
    attained at a vertex.
    """
    _check_same_dim(P, Q)
    excess_pq = max(point_distance(v, Q, tol) for v in P.vertices)
    excess_qp = max(point_distance(v, P, tol) for v in Q.vertices)
    return max(excess_pq, excess_qp)


def contains(Q: Polytope, P: Polytope, tol: float = 1e-9) -> bool:
    """True iff ``P`` is a subset of ``Q`` up to ``tol``."""
    _check_same_dim(P, Q)
    dist_tol = min(DEFAULT_TOL, tol / 10)
    return all(point_distance(v, Q, dist_tol) <= tol for v in P.vertices)


def minkowski_average(weights: Sequence[float], polytopes: Sequence[Polytope]) -> Polytope:
    """Canonical vertex list of ``sum_i w_i P_i``.

    The hull of all vertex-tuple sums, accumulated one summand at a time
    (pruning to the hull after each step gives the same set).
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or len(w) != len(polytopes):
        raise MalformedInputError(f"{w.size} weights for {len(polytopes)} polytopes")
    if len(w) == 0:
        raise MalformedInputError("empty Minkowski combination")
    if np.any(w < 0):
        raise MalformedInputError("weights must be nonnegative")
    if abs(w.sum() - 1.0) > 1e-12:
        raise MalformedInputError(f"weights sum to {w.sum()!r}, not 1")
    d = polytopes[0].dim
    for P in polytopes:
        if P.dim != d:
            raise DimensionMismatchError("all summands must share a dimension")
    acc = np.zeros((1, d))
    for wi, P in zip(w, polytopes):
        if wi == 0.0:
            continue
        sums = (acc[:, None, :] + wi * P.vertices[None, :, :]).reshape(-1, d)
        acc = canonical_vertices(sums)
    return Polytope(acc)


# ---------------------------------------------------------------------------
# direction grids


@dataclass(frozen=True, eq=False)
class DirectionGrid:
    """Finite symmetric family of unit directions.

    ``resolution`` is the covering radius as a chord length: every unit
    vector is within ``resolution`` of some grid direction (exact in the
    plane, estimated on a dense reference set otherwise).
    """

    directions: np.ndarray
    resolution: float

    def __post_init__(self):
        dirs = np.array(self.directions, dtype=float)
        if dirs.ndim != 2 or dirs.shape[0] == 0:
            raise MalformedInputError("grid needs a nonempty (k, d) array")
        if np.any(np.abs(np.linalg.norm(dirs, axis=1) - 1.0) > 1e-12):
            raise MalformedInputError("grid directions must be unit vectors")
        object.__setattr__(self, "directions", _readonly(dirs))

    @property
    def dim(self) -> int:
        return self.directions.shape[1]

    def __len__(self):
        return self.directions.shape[0]

    @classmethod
    def uniform(cls, d: int = 2, k: int = 720) -> "DirectionGrid":
        if d == 1:
            return cls(np.array([[1.0], [-1.0]]), 0.0)
        if d == 2:
            if k < 4 or k % 2:
                raise MalformedInputError("planar grid size must be even and >= 4")
            theta = 2 * np.pi * np.arange(k) / k
            dirs = np.column_stack([np.cos(theta), np.sin(theta)])
            return cls(dirs, 2 * math.sin(math.pi / (2 * k)))
        return cls._sphere(d, k)

    @classmethod
    def _sphere(cls, d: int, k: int) -> "DirectionGrid":
        half = max(1, k // 2)
        sampler = qmc.Halton(d, scramble=False)
        u = sampler.random(half + 1)[1:]
        z = _normal_ppf(np.clip(u, 1e-12, 1 - 1e-12))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        dirs = np.vstack([z, -z])
        ref = qmc.Halton(d, scramble=False).random(20 * k + 1)[1:]
        ref = _normal_ppf(np.clip(ref, 1e-12, 1 - 1e-12))
        ref /= np.linalg.norm(ref, axis=1, keepdims=True)
        cos = np.max(ref @ dirs.T, axis=1)
        chord = np.sqrt(np.maximum(0.0, 2 - 2 * cos))
        return cls(dirs, float(chord.max()))


def _normal_ppf(u):
    from scipy.special import ndtri

    return ndtri(u)


def hausdorff_direction_grid(P: Polytope, Q: Polytope, grid: DirectionGrid) -> float:
    """``max_u |s(u,P) - s(u,Q)|`` over the grid: a lower estimate of ``h(P,Q)``."""
    _check_same_dim(P, Q)
    if grid.dim != P.dim:
        raise DimensionMismatchError("grid dimension differs from polytopes")
    diff = support_function(P, grid.directions) - support_function(Q, grid.directions)
    return float(np.max(np.abs(diff)))


def grid_resolution_bound(P: Polytope, Q: Polytope, grid: DirectionGrid) -> float:
    """Upper bound on ``h(P,Q) - hausdorff_direction_grid(P,Q,grid)``.

    Support functions are Lipschitz on the sphere with constant ``|P|`` and
    the Hausdorff distance is translation invariant, so both sets are first
    centered on a common point.
    """
    allv = np.vstack([P.vertices, Q.vertices])
    c = 0.5 * (allv.min(axis=0) + allv.max(axis=0))
    lip = np.max(np.linalg.norm(P.vertices - c, axis=1)) + np.max(
        np.linalg.norm(Q.vertices - c, axis=1)
    )
    return float(lip * grid.resolution)


# ---------------------------------------------------------------------------
# batched planar distances for trajectories


def _seg_dist(x, a, b):
    # x: (K, 2), a/b: (K, P, 2) -> (K, P)
    ab = b - a
    L2 = np.einsum("kpi,kpi->kp", ab, ab)
    t = np.einsum("kpi,kpi->kp", x[:, None, :] - a, ab) / np.where(L2 > 0, L2, 1.0)
    t = np.clip(np.where(L2 > 0, t, 0.0), 0.0, 1.0)
    proj = a + t[..., None] * ab
    return np.linalg.norm(x[:, None, :] - proj, axis=-1)


def _inside_triangles(x, A, B, C):
    def side(p, q, r):
        return (q[..., 0] - p[..., 0]) * (r[..., 1] - p[..., 1]) - (q[..., 1] - p[..., 1]) * (r[..., 0] - p[..., 0])

    xx = x[:, None, :]
    s1, s2, s3 = side(A, B, xx), side(B, C, xx), side(C, A, xx)
    return ((s1 >= 0) & (s2 >= 0) & (s3 >= 0)) | ((s1 <= 0) & (s2 <= 0) & (s3 <= 0))


def hull_distance_2d_batch(x, points) -> np.ndarray:
    """Distance from ``x[k]`` to ``co(points[k])`` for stacks of small planar point sets.

    ``x``: ``(K, 2)``; ``points``: ``(K, n, 2)``. Outside the hull the nearest
    point lies on a segment joining two of the points; inside, ``x`` lies in a
    triangle spanned by three of them.
    """
    x = np.asarray(x, dtype=float)
    pts = np.asarray(points, dtype=float)
    n = pts.shape[1]
    i, j = np.triu_indices(n)
    d = _seg_dist(x, pts[:, i], pts[:, j]).min(axis=1)
    if n >= 3:
        tri = np.array([(a, b, c) for a in range(n) for b in range(a + 1, n) for c in range(b + 1, n)])
        inside = _inside_triangles(x, pts[:, tri[:, 0]], pts[:, tri[:, 1]], pts[:, tri[:, 2]]).any(axis=1)
        d = np.where(inside, 0.0, d)
    return d


def hausdorff_2d_batch(A, B) -> np.ndarray:
    """``h(co(A[k]), co(B[k]))`` for stacks ``A: (K, n, 2)``, ``B: (K, m, 2)``."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    K = A.shape[0]
    ab = np.max([hull_distance_2d_batch(A[:, i], B) for i in range(A.shape[1])], axis=0)
    ba = np.max([hull_distance_2d_batch(B[:, j], A) for j in range(B.shape[1])], axis=0)
    return np.maximum(ab, ba).reshape(K)
