"""Seeded Brownian drivers and the trajectory objects built on them.

Paths are generated coarse to fine from each ``(sample, component)`` stream:
first the endpoint ``B_T``, then the values at block boundaries given the
endpoint, then the individual steps inside each block given the boundaries.
In random-walk mode the conditional laws are binomial, multivariate
hypergeometric and uniform arrangements; in Gaussian mode they are Brownian
bridges. Asking only for the endpoint consumes only the first draw, so
terminal statistics over many samples never touch the full path, and the
endpoint of a fully materialized path is bitwise the same number.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import MalformedInputError
from .rng import chunked, ordered_map, substream

MAX_BLOCKS = 500
CHUNK = 512


@dataclass(frozen=True)
class PathEnsemble:
    """Lazily evaluated ensemble of ``samples`` paths of an ``m``-dimensional driver.

    ``mode`` is ``"walk"`` (steps of ``+-sqrt(dt)``) or ``"gauss"`` (steps
    ``N(0, dt)``). ``mixing``, if given, is a lower-triangular ``m x m``
    matrix applied to the independent components (correlated drivers).
    """

    m: int
    N: int
    T: float
    mode: str
    seed: int
    samples: int
    mixing: tuple | None = None

    def __post_init__(self):
        if self.N < 1 or self.T <= 0 or self.samples < 1 or self.m < 1:
            raise MalformedInputError("need N >= 1, T > 0, samples >= 1, m >= 1")
        if self.mode not in ("walk", "gauss"):
            raise MalformedInputError(f"unknown driver mode {self.mode!r}")

    @property
    def dt(self) -> float:
        return self.T / self.N

    @property
    def block_size(self) -> int:
        return math.ceil(self.N / MAX_BLOCKS)

    @property
    def block_steps(self) -> np.ndarray:
        """Step indices of block boundaries, from 0 to N."""
        return np.append(np.arange(0, self.N, self.block_size), self.N)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.N + 1) * self.dt

    def _indices(self, idx):
        if idx is None:
            return np.arange(self.samples)
        idx = np.atleast_1d(np.asarray(idx, dtype=np.int64))
        if np.any(idx < 0) or np.any(idx >= self.samples):
            raise MalformedInputError("sample index out of range")
        return idx

    # -- per-stream generation ------------------------------------------

    def _one(self, sample: int, comp: int, level: int) -> np.ndarray:
        """Driver values for one component: level 0 endpoint, 1 block boundaries, 2 every step.

        Walk mode returns integer step counts (multiply by sqrt(dt)).
        """
        g = substream(self.seed, int(sample), comp)
        N = self.N
        sizes = np.diff(self.block_steps)
        nb, b = len(sizes), self.block_size
        if self.mode == "walk":
            ups = int(g.binomial(N, 0.5))
            if level == 0:
                return np.array([2 * ups - N], dtype=np.int64)
            per_block = g.multivariate_hypergeometric(sizes, ups)
            bounds = np.concatenate([[0], np.cumsum(2 * per_block - sizes)])
            if level == 1:
                return bounds
            keys = g.random((nb, b))
            keys[np.arange(b)[None, :] >= sizes[:, None]] = 2.0
            ranks = np.argsort(np.argsort(keys, axis=1, kind="stable"), axis=1, kind="stable")
            steps = np.where(ranks < per_block[:, None], 1, -1)
            steps = steps[np.arange(b)[None, :] < sizes[:, None]]
            return np.concatenate([[0], np.cumsum(steps)])
        # Gaussian mode: endpoint, then bridges
        T = self.T
        BT = math.sqrt(T) * g.standard_normal()
        if level == 0:
            return np.array([BT])
        tb = self.block_steps * self.dt
        W = np.concatenate([[0.0], np.cumsum(g.standard_normal(nb) * np.sqrt(np.diff(tb)))])
        X = W - (tb / T) * W[-1] + (tb / T) * BT
        X[-1] = BT
        if level == 1:
            return X
        z = g.standard_normal((nb, b)) * math.sqrt(self.dt)
        valid = np.arange(b)[None, :] < sizes[:, None]
        z[~valid] = 0.0
        Wf = np.cumsum(z, axis=1)
        Wend = Wf[np.arange(nb), sizes - 1]
        frac = (np.arange(1, b + 1)[None, :]) / sizes[:, None]
        Y = X[:-1, None] + Wf - frac * Wend[:, None] + frac * (X[1:] - X[:-1])[:, None]
        Y[np.arange(nb), sizes - 1] = X[1:]
        return np.concatenate([[0.0], Y[valid]])

    def _values(self, idx, level: int, steps=None) -> np.ndarray:
        idx = self._indices(idx)
        scale = math.sqrt(self.dt) if self.mode == "walk" else 1.0

        def work(chunk):
            rows = []
            for s in chunk:
                comps = []
                for c in range(self.m):
                    v = self._one(int(idx[s]), c, level)
                    comps.append(v if steps is None else v[steps])
                rows.append(np.stack(comps, axis=-1))
            return np.stack(rows) * scale

        parts = ordered_map(work, chunked(len(idx), CHUNK))
        out = np.concatenate(parts, axis=0)
        if self.mixing is not None:
            out = out @ np.asarray(self.mixing, dtype=float).T
        return out

    def terminal(self, idx=None) -> np.ndarray:
        """``B_T`` per sample, shape ``(S, m)``."""
        return self._values(idx, 0)[:, 0, :]

    def block_values(self, idx=None) -> np.ndarray:
        """``B`` at :attr:`block_steps`, shape ``(S, blocks + 1, m)``."""
        return self._values(idx, 1)

    def paths(self, idx=None, steps=None) -> np.ndarray:
        """``B`` at every step (or at the given step indices), shape ``(S, len, m)``."""
        if steps is not None:
            steps = np.asarray(steps, dtype=np.int64)
            if np.any(steps < 0) or np.any(steps > self.N):
                raise MalformedInputError("step index out of range")
        return self._values(idx, 2, steps)

    def increments(self, idx=None) -> np.ndarray:
        return np.diff(self.paths(idx), axis=1)


def brownian_paths(m: int, N: int, T: float, mode: str = "walk", seed: int = 1,
                   samples: int = 1, correlation=None) -> PathEnsemble:
    mixing = None
    if correlation is not None:
        C = np.asarray(correlation, dtype=float)
        if C.shape != (m, m):
            raise MalformedInputError(f"correlation must be {m}x{m}")
        mixing = tuple(map(tuple, np.linalg.cholesky(C)))
    return PathEnsemble(m, N, float(T), mode, int(seed), samples, mixing)


def thin_steps(N: int, thin: int | None = None) -> np.ndarray:
    """Stored step indices: every ``thin``-th step plus the last (default ``ceil(N/500)``)."""
    thin = math.ceil(N / MAX_BLOCKS) if thin is None else int(thin)
    if thin < 1:
        raise MalformedInputError("thin must be >= 1")
    steps = np.arange(0, N + 1, thin)
    if steps[-1] != N:
        steps = np.append(steps, N)
    return steps


def exponential_martingale(B, times, alpha: float, component: int | None = None,
                           walk_dt: float | None = None) -> np.ndarray:
    """``exp(alpha B_t - alpha^2 t / 2)`` along paths ``B`` of shape ``(..., len(times), m)``.

    With ``walk_dt`` set, the exact discrete martingale of a ``+-sqrt(dt)``
    random walk, ``exp(alpha B_t) / cosh(alpha sqrt(dt))^(t/dt)``, is returned
    instead; it matches the closed form as ``dt -> 0``.
    """
    B = np.asarray(B, dtype=float)
    t = np.asarray(times, dtype=float)
    if component is not None:
        if not 0 <= component < B.shape[-1]:
            raise MalformedInputError("component out of range")
        B = B[..., component]
        tt = t
    else:
        tt = t[:, None]
    if walk_dt is None:
        return np.exp(alpha * B - 0.5 * alpha * alpha * tt)
    k = np.rint(tt / walk_dt)
    return np.exp(alpha * B - k * math.log(math.cosh(alpha * math.sqrt(walk_dt))))
