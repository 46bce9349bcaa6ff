"""Seeded corpus of random-triangle scenario trees.

Deterministic-fan cases carry, at every leaf, the triangle with vertices
``(-e1, -e2), (e2 + e3, -e2), (-e1, e1 + e3)`` for an offset vector ``e``
drawn from the open cone ``{e1 + e2 + e3 > 0}``. Rotated cases take the same
construction and turn the labeled vertices of a nonempty proper subset of
leaves by a quarter turn about the origin.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tree import ScenarioTree

QUARTER_TURN = np.array([[0.0, -1.0], [1.0, 0.0]])
CORPUS_SEED = 7905


def triangle_vertices(eta) -> np.ndarray:
    """Labeled vertices for offsets ``eta`` of shape ``(..., 3)``; returns ``(..., 3, 2)``."""
    e = np.asarray(eta, dtype=float)
    e1, e2, e3 = e[..., 0], e[..., 1], e[..., 2]
    v1 = np.stack([-e1, -e2], axis=-1)
    v2 = np.stack([e2 + e3, -e2], axis=-1)
    v3 = np.stack([-e1, e1 + e3], axis=-1)
    return np.stack([v1, v2, v3], axis=-2)


@dataclass
class CorpusCase:
    tree: ScenarioTree
    selections: np.ndarray  # (leaves, 3, 2)
    kind: str  # "deterministic" or "rotated"
    rotated_leaves: tuple = ()


def sample_offsets(rng: np.random.Generator, size: int, min_sum: float = 0.5) -> np.ndarray:
    """Offsets uniform on ``[-1, 2]^3`` conditioned on ``sum > min_sum``."""
    out = np.empty((0, 3))
    while len(out) < size:
        e = rng.uniform(-1.0, 2.0, size=(2 * size, 3))
        out = np.vstack([out, e[e.sum(axis=1) > min_sum]])
    return out[:size]


def random_tree(rng: np.random.Generator, max_depth: int = 4) -> ScenarioTree:
    depth = int(rng.integers(1, max_depth + 1))
    tables = []
    n = 1
    for _ in range(depth):
        p = rng.uniform(0.2, 0.8, size=n)
        tables.append(np.column_stack([p, 1 - p]))
        n *= 2
    return ScenarioTree((2,) * depth, tuple(tables))


def make_case(rng: np.random.Generator, kind: str, max_depth: int = 4) -> CorpusCase:
    tree = random_tree(rng, max_depth)
    L = tree.n_leaves
    X = triangle_vertices(sample_offsets(rng, L))
    rotated: tuple = ()
    if kind == "rotated":
        k = int(rng.integers(1, L))
        rotated = tuple(sorted(rng.choice(L, size=k, replace=False).tolist()))
        X[list(rotated)] = X[list(rotated)] @ QUARTER_TURN.T
    elif kind != "deterministic":
        raise ValueError(f"unknown case kind {kind!r}")
    return CorpusCase(tree, X, kind, rotated)


def make_corpus(seed: int = CORPUS_SEED, n_deterministic: int = 100, n_rotated: int = 100,
                max_depth: int = 4) -> list[CorpusCase]:
    rng = np.random.default_rng(seed)
    cases = [make_case(rng, "deterministic", max_depth) for _ in range(n_deterministic)]
    cases += [make_case(rng, "rotated", max_depth) for _ in range(n_rotated)]
    return cases
