"""Slow, independent reference computations used to cross-check the kernels.

Nothing here shares code with the routines it checks: distances are plain
segment projections (pointwise or on a lattice of points), Minkowski sums enumerate vertex tuples, partitions are
enumerated exhaustively and alpha rows come from 2D cross products.
"""
from __future__ import annotations

import itertools

import numpy as np


def _seg_point_dist(p, a, b) -> float:
    ab = b - a
    den = float(ab @ ab)
    t = 0.0 if den == 0.0 else min(1.0, max(0.0, float((p - a) @ ab) / den))
    return float(np.linalg.norm(p - (a + t * ab)))


def _inside_ccw(p, V) -> bool:
    n = len(V)
    if n < 3:
        return False
    for i in range(n):
        a, b = V[i], V[(i + 1) % n]
        if (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) < 0:
            return False
    return True


def dist_to_polygon(p, V) -> float:
    """Distance from ``p`` to the polygon with counterclockwise vertices ``V``."""
    p = np.asarray(p, dtype=float)
    V = np.asarray(V, dtype=float)
    if len(V) == 1:
        return float(np.linalg.norm(p - V[0]))
    if _inside_ccw(p, V):
        return 0.0
    return min(_seg_point_dist(p, V[i], V[(i + 1) % len(V)]) for i in range(len(V)))


def dist_to_polygon_many(X, V) -> np.ndarray:
    """Vectorized :func:`dist_to_polygon` over points ``X`` of shape ``(M, 2)``."""
    X = np.asarray(X, dtype=float)
    V = np.asarray(V, dtype=float)
    if len(V) == 1:
        return np.linalg.norm(X - V[0], axis=1)
    A, B = V, np.roll(V, -1, axis=0)
    AB = B - A
    den = np.maximum(np.einsum("ij,ij->i", AB, AB), np.finfo(float).tiny)
    t = np.clip(np.einsum("mij,ij->mi", X[:, None, :] - A[None], AB) / den, 0.0, 1.0)
    foot = A[None] + t[..., None] * AB[None]
    d = np.linalg.norm(X[:, None, :] - foot, axis=2).min(axis=1)
    if len(V) >= 3:
        cross = AB[None, :, 0] * (X[:, None, 1] - A[None, :, 1]) - AB[None, :, 1] * (X[:, None, 0] - A[None, :, 0])
        d[np.all(cross >= 0, axis=1)] = 0.0
    return d


def point_grid_hausdorff(VP, VQ, n: int = 41, margin: float = 0.25) -> float:
    """Lower bound ``max_x |d(x,P) - d(x,Q)|`` over an ``n x n`` lattice of points ``x``.

    The lattice covers the joint bounding box widened by ``margin`` of its size
    on every side. The supremum over the whole plane is the Hausdorff distance,
    so any finite lattice gives a lower bound.
    """
    VP = np.asarray(VP, dtype=float)
    VQ = np.asarray(VQ, dtype=float)
    allv = np.vstack([VP, VQ])
    lo, hi = allv.min(axis=0), allv.max(axis=0)
    pad = margin * np.maximum(hi - lo, 1e-12)
    xs = np.linspace(lo[0] - pad[0], hi[0] + pad[0], n)
    ys = np.linspace(lo[1] - pad[1], hi[1] + pad[1], n)
    X = np.stack(np.meshgrid(xs, ys), axis=-1).reshape(-1, 2)
    return float(np.max(np.abs(dist_to_polygon_many(X, VP) - dist_to_polygon_many(X, VQ))))


def hausdorff_by_vertices(VP, VQ) -> float:
    """Exact planar Hausdorff distance by projecting every vertex onto the other polygon."""
    a = max(dist_to_polygon(p, VQ) for p in np.asarray(VP, dtype=float))
    b = max(dist_to_polygon(q, VP) for q in np.asarray(VQ, dtype=float))
    return max(a, b)


def minkowski_by_enumeration(weights, vertex_sets) -> np.ndarray:
    """All weighted vertex-tuple sums (not yet hulled)."""
    sets = [np.asarray(V, dtype=float) for V in vertex_sets]
    sums = [sum(w * v for w, v in zip(weights, tup)) for tup in itertools.product(*sets)]
    return np.array(sums)


def best_partitions(probs, zeta, tol: float = 1e-12):
    """Exhaustive search over all ``n**atoms`` assignments ``atom -> index``.

    Returns the optimal value and the optimal assignments in lexicographic order.
    """
    p = np.asarray(probs, dtype=float)
    Z = np.asarray(zeta, dtype=float)
    n, A = Z.shape
    assign = np.array(list(itertools.product(range(n), repeat=A)), dtype=np.int64).reshape(-1, A)
    vals = np.zeros(len(assign))
    for a in range(A):
        vals += p[a] * Z[assign[:, a], a]
    best = float(vals.max())
    return best, [tuple(r) for r in assign[vals >= best - tol].tolist()]


def alpha_by_cross_products(a, b, c) -> np.ndarray:
    """Coefficients of ``x a + y b + z c = 0`` for planar ``a, b, c``, scaled so the middle one is 1.

    Uses the identity ``[b,c] a + [c,a] b + [a,b] c = 0`` with ``[u,v]`` the 2D cross product.
    """
    def cr(u, v):
        return u[0] * v[1] - u[1] * v[0]

    coef = np.array([cr(b, c), cr(c, a), cr(a, b)], dtype=float)
    return coef / coef[1]
