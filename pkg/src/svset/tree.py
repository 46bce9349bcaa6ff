"""Finite filtered probability spaces as scenario trees.

A tree with levels ``0..K`` has ``prod(branching[:k])`` nodes at level ``k``,
numbered left to right, so the leaves below node ``(k, i)`` form the
contiguous block ``i*B_k .. (i+1)*B_k - 1`` with ``B_k = prod(branching[k:])``.
Random variables are leaf-indexed arrays; conditional expectations given
level ``k`` are node-indexed arrays. Set-valued conditional expectations are
probability-weighted Minkowski averages, so everything here is exact up to
floating point.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .errors import EnumerationGuardError, MalformedInputError, NumericalFailureError
from .geometry import Polytope, contains, hausdorff_distance, minkowski_average

ENUMERATION_GUARD = 10**6
GAP_TOL = 1e-7
INCLUSION_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ScenarioTree:
    """Rooted tree with conditional branch probabilities per node."""

    branching: tuple
    cond_probs: tuple

    def __post_init__(self):
        br = tuple(int(b) for b in self.branching)
        if any(b < 1 for b in br):
            raise MalformedInputError("branching factors must be positive")
        if len(self.cond_probs) != len(br):
            raise MalformedInputError("one probability table per level is required")
        tables = []
        n_nodes = 1
        for k, (b, tab) in enumerate(zip(br, self.cond_probs)):
            t = np.array(tab, dtype=float)
            if t.ndim == 1:
                t = np.broadcast_to(t, (n_nodes, len(t))).copy()
            if t.shape != (n_nodes, b):
                raise MalformedInputError(f"level {k}: probability table shape {t.shape}, expected {(n_nodes, b)}")
            if np.any(t <= 0) or np.any(t > 1):
                raise MalformedInputError(f"level {k}: conditional probabilities must lie in (0, 1]")
            if np.any(np.abs(t.sum(axis=1) - 1.0) > 1e-12):
                raise MalformedInputError(f"level {k}: child probabilities do not sum to 1")
            t.setflags(write=False)
            tables.append(t)
            n_nodes *= b
        object.__setattr__(self, "branching", br)
        object.__setattr__(self, "cond_probs", tuple(tables))

    @classmethod
    def binary(cls, depth: int, p: float = 0.5) -> "ScenarioTree":
        return cls((2,) * depth, tuple([[p, 1 - p]] * depth))

    @classmethod
    def from_levels(cls, branching: Sequence[int], probs=None) -> "ScenarioTree":
        if probs is None:
            probs = [[1.0 / b] * b for b in branching]
        return cls(tuple(branching), tuple(probs))

    @property
    def depth(self) -> int:
        return len(self.branching)

    def n_nodes(self, level: int) -> int:
        self._check_level(level)
        return math.prod(self.branching[:level])

    @property
    def n_leaves(self) -> int:
        return math.prod(self.branching)

    def block(self, level: int) -> int:
        """Number of leaves under each node of ``level``."""
        return math.prod(self.branching[level:])

    def _check_level(self, level):
        if not 0 <= level <= self.depth:
            raise MalformedInputError(f"level {level} outside 0..{self.depth}")

    def node_probs(self, level: int) -> np.ndarray:
        self._check_level(level)
        p = np.ones(1)
        for k in range(level):
            p = (p[:, None] * self.cond_probs[k]).reshape(-1)
        return p

    @property
    def leaf_probs(self) -> np.ndarray:
        return self.node_probs(self.depth)

    def children(self, level: int, node: int) -> range:
        b = self.branching[level]
        return range(node * b, (node + 1) * b)

    def leaves_of(self, level: int, node: int) -> range:
        B = self.block(level)
        return range(node * B, (node + 1) * B)

    def path(self, leaf: int) -> tuple:
        out = []
        for b in reversed(self.branching):
            out.append(leaf % b)
            leaf //= b
        return tuple(reversed(out))

    def internal_nodes(self):
        for k in range(self.depth):
            for i in range(self.n_nodes(k)):
                yield k, i


def _leaf_array(tree: ScenarioTree, rv) -> np.ndarray:
    x = np.asarray(rv, dtype=float)
    if x.shape[0] != tree.n_leaves:
        raise MalformedInputError(f"random variable has {x.shape[0]} leaf values, tree has {tree.n_leaves} leaves")
    return x


def cond_expect_vector(tree: ScenarioTree, rv, level: int) -> np.ndarray:
    """``E[rv | level]`` as a node-indexed array; trailing axes are carried along."""
    x = _leaf_array(tree, rv)
    n = tree.n_nodes(level)
    B = tree.block(level)
    p = tree.leaf_probs.reshape(n, B)
    w = p / p.sum(axis=1, keepdims=True)
    xb = x.reshape((n, B) + x.shape[1:])
    return np.einsum("nb,nb...->n...", w, xb)


def _node_weights(tree: ScenarioTree, level: int, node: int) -> np.ndarray:
    p = tree.leaf_probs[tree.leaves_of(level, node).start : tree.leaves_of(level, node).stop]
    w = p / p.sum()
    # keep the sum at exactly one for the Minkowski average precondition
    w[-1] = 1.0 - w[:-1].sum()
    return np.maximum(w, 0.0)


def cond_expect_polytope(tree: ScenarioTree, leaf_polytopes: Sequence[Polytope], level: int) -> list[Polytope]:
    if len(leaf_polytopes) != tree.n_leaves:
        raise MalformedInputError("one polytope per leaf is required")
    out = []
    for i in range(tree.n_nodes(level)):
        r = tree.leaves_of(level, i)
        out.append(minkowski_average(_node_weights(tree, level, i), leaf_polytopes[r.start : r.stop]))
    return out


def conditional_process(tree: ScenarioTree, leaf_polytopes: Sequence[Polytope]) -> list[list[Polytope]]:
    """The set-valued martingale ``E[Xi | level]`` at every level."""
    return [cond_expect_polytope(tree, leaf_polytopes, k) for k in range(tree.depth + 1)]


def _children_average(tree: ScenarioTree, proc, level: int, node: int) -> Polytope:
    kids = tree.children(level, node)
    w = np.array(tree.cond_probs[level][node], dtype=float)
    w[-1] = 1.0 - w[:-1].sum()
    return minkowski_average(w, [proc[level + 1][c] for c in kids])


@dataclass
class AuditReport:
    max_defect: float
    defects: list = field(default_factory=list)  # (level, node, defect)
    sub_ok: bool = True  # E[children] contains node everywhere
    super_ok: bool = True  # node contains E[children] everywhere
    verdict: str = "martingale"

    def to_dict(self):
        return {
            "max_defect": self.max_defect,
            "sub_ok": self.sub_ok,
            "super_ok": self.super_ok,
            "verdict": self.verdict,
            "defects": [{"level": k, "node": i, "defect": d} for k, i, d in self.defects],
        }


def martingale_audit(tree: ScenarioTree, proc, tol: float = GAP_TOL) -> AuditReport:
    """Compare every internal node with the conditional Minkowski average of its children."""
    if len(proc) != tree.depth + 1 or any(len(proc[k]) != tree.n_nodes(k) for k in range(tree.depth + 1)):
        raise MalformedInputError("process must give one polytope per node at every level")
    defects = []
    sub_ok = super_ok = True
    for k, i in tree.internal_nodes():
        avg = _children_average(tree, proc, k, i)
        here = proc[k][i]
        defects.append((k, i, hausdorff_distance(here, avg)))
        sub_ok &= contains(avg, here, INCLUSION_TOL)
        super_ok &= contains(here, avg, INCLUSION_TOL)
    max_def = max((d for _, _, d in defects), default=0.0)
    if max_def <= tol:
        verdict = "martingale"
    elif sub_ok:
        verdict = "submartingale only"
    elif super_ok:
        verdict = "supermartingale only"
    else:
        verdict = "neither"
    return AuditReport(max_def, defects, bool(sub_ok), bool(super_ok), verdict)


@dataclass
class HullReport:
    """Per-node comparison of ``co{E[xi^i|node]}`` with ``E[co{xi^i}|node]``."""

    gaps: list  # (level, node, hausdorff gap)
    inclusion_ok: bool
    reverse_strict: bool
    norm_submartingale_ok: bool
    max_gap: float
    verdict: str

    @property
    def is_martingale(self) -> bool:
        return self.verdict == "martingale"

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "max_gap": self.max_gap,
            "inclusion_ok": self.inclusion_ok,
            "reverse_strict": self.reverse_strict,
            "norm_submartingale_ok": self.norm_submartingale_ok,
            "gaps": [{"level": k, "node": i, "gap": g} for k, i, g in self.gaps],
        }


def hull_vs_conditional(tree: ScenarioTree, selections, tol: float = GAP_TOL) -> HullReport:
    """``selections`` has shape ``(leaves, n, d)``: the labeled vertices ``xi^i`` per leaf."""
    X = _leaf_array(tree, selections)
    if X.ndim != 3:
        raise MalformedInputError("selections must have shape (leaves, n, d)")
    leaf_polys = [Polytope.from_points(x) for x in X]
    M = conditional_process(tree, leaf_polys)
    gaps = []
    inclusion_ok = True
    reverse_strict = False
    for k in range(tree.depth + 1):
        ce = cond_expect_vector(tree, X, k)
        for i in range(tree.n_nodes(k)):
            G = Polytope.from_points(ce[i])
            gap = hausdorff_distance(G, M[k][i])
            gaps.append((k, i, gap))
            inclusion_ok &= contains(M[k][i], G, INCLUSION_TOL)
            if gap > tol and contains(G, M[k][i], INCLUSION_TOL):
                reverse_strict = True
    norm_ok = True
    for k, i in tree.internal_nodes():
        w = tree.cond_probs[k][i]
        rhs = sum(wc * M[k + 1][c].norm() for wc, c in zip(w, tree.children(k, i)))
        norm_ok &= M[k][i].norm() <= rhs + 1e-9
    max_gap = max(g for _, _, g in gaps)
    verdict = "martingale" if max_gap <= tol else "strict submartingale"
    return HullReport(gaps, bool(inclusion_ok), reverse_strict, bool(norm_ok), max_gap, verdict)


# ---------------------------------------------------------------------------
# randomization of finitely many selections


@dataclass
class RandomizationResult:
    partition_value: float
    expected_max: float
    simplex_value: float
    partition: np.ndarray  # atom -> index of the partition cell containing it

    @property
    def discrepancy(self) -> float:
        vals = (self.partition_value, self.expected_max, self.simplex_value)
        return max(vals) - min(vals)

    def to_dict(self):
        return {
            "partition_value": self.partition_value,
            "expected_max": self.expected_max,
            "simplex_value": self.simplex_value,
            "discrepancy": self.discrepancy,
            "partition": self.partition.tolist(),
        }


def argmax_partition(zeta) -> np.ndarray:
    """Cell index per atom: the first ``i`` attaining ``max_j zeta_j``."""
    Z = np.asarray(zeta, dtype=float)
    best = Z.max(axis=0)
    return np.argmax(Z == best, axis=0)


def randomization_identity(probs, zeta, tol: float = 1e-12) -> RandomizationResult:
    """Evaluate the three suprema of the randomization lemma on a finite space.

    ``zeta`` has shape ``(n, atoms)``. The partition supremum is evaluated at
    the argmax partition, the expected maximum directly, and the supremum over
    simplex-valued weights by linear programming (then read off at the
    simplex vertex the solver selects per atom).
    """
    p = np.asarray(probs, dtype=float)
    Z = np.asarray(zeta, dtype=float)
    if Z.ndim == 1:
        Z = Z[None, :]
    n, A = Z.shape
    if n < 1 or p.shape != (A,):
        raise MalformedInputError("zeta must have shape (n, atoms) matching probs")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
        raise MalformedInputError("atom probabilities must be a distribution")
    cells = argmax_partition(Z)
    partition_value = float(np.sum(p * Z[cells, np.arange(A)]))
    expected_max = float(np.sum(p * Z.max(axis=0)))
    # variables eta[i, a] >= 0 with sum_i eta[i, a] = 1 for every atom
    c = -(Z * p[None, :]).reshape(-1)
    A_eq = np.zeros((A, n * A))
    for a in range(A):
        A_eq[a, a::A] = 1.0
    res = linprog(c, A_eq=A_eq, b_eq=np.ones(A), bounds=(0, None), method="highs-ds")
    if res.status != 0:
        raise NumericalFailureError(f"simplex LP failed: {res.message}")
    eta = res.x.reshape(n, A)
    pick = np.argmax(eta, axis=0)
    simplex_value = float(np.sum(p * Z[pick, np.arange(A)]))
    out = RandomizationResult(partition_value, expected_max, simplex_value, cells)
    if out.discrepancy > tol:
        raise NumericalFailureError(f"suprema disagree by {out.discrepancy:.3e}")
    return out


def decomposable_hull(atoms, K: Sequence[np.ndarray], guard: int = ENUMERATION_GUARD) -> list[np.ndarray]:
    """All atom-wise mixtures of the random vectors in ``K``, deduplicated.

    ``atoms`` is either a list of leaf-index groups partitioning the leaves
    or an integer leaf count (every leaf its own atom).
    """
    if not K:
        raise MalformedInputError("K must be nonempty")
    arrs = [np.asarray(k, dtype=float) for k in K]
    L = arrs[0].shape[0]
    if any(a.shape != arrs[0].shape for a in arrs):
        raise MalformedInputError("elements of K must share a shape")
    groups = [[i] for i in range(atoms)] if isinstance(atoms, int) else [list(g) for g in atoms]
    if sorted(i for g in groups for i in g) != list(range(L)):
        raise MalformedInputError("atoms must partition the leaves")
    total = len(arrs) ** len(groups)
    if total > guard:
        raise EnumerationGuardError(f"{total} mixtures exceed the guard {guard}")
    seen = set()
    out = []
    for choice in itertools.product(range(len(arrs)), repeat=len(groups)):
        mix = np.empty_like(arrs[0])
        for g, c in zip(groups, choice):
            mix[g] = arrs[c][g]
        key = np.round(mix, 12).tobytes()
        if key not in seen:
            seen.add(key)
            out.append(mix)
    return out
