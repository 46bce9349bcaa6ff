"""Experiment configuration records."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import MalformedInputError

SUITES = ("geometry", "fan", "tree", "mc", "all")
TREE_MODES = ("audit", "equivalence", "randomization")


class _Config:
    @classmethod
    def from_dict(cls, raw: dict):
        if not isinstance(raw, dict):
            raise MalformedInputError(f"{cls.__name__} must be a JSON object")
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(raw) - names)
        if unknown:
            raise MalformedInputError(f"unknown config keys: {', '.join(unknown)}")
        try:
            return cls(**raw)
        except TypeError as exc:
            raise MalformedInputError(str(exc)) from None

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def load(cls, path):
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise MalformedInputError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(raw)

    def replace(self, **changes):
        changes = {k: v for k, v in changes.items() if v is not None}
        return self.from_dict({**self.to_dict(), **changes})


def _check_int(name, v, lo):
    if isinstance(v, bool) or not isinstance(v, int) or v < lo:
        raise MalformedInputError(f"{name} must be an integer >= {lo}, got {v!r}")


def _check_pos(name, v):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
        raise MalformedInputError(f"{name} must be a positive number, got {v!r}")


@dataclass(frozen=True)
class SimulateConfig(_Config):
    seed: int = 1
    samples: int = 100_000
    N: int = 10_000
    T: float = 1.0
    alpha: float = 0.5
    mode: str = "walk"
    grid_k: int = 720
    thin: int | None = None
    trajectory_samples: int = 1
    correlation: list | None = None
    tol: float = 1e-9

    def __post_init__(self):
        _check_int("seed", self.seed, 0)
        if self.seed >= 1 << 64:
            raise MalformedInputError("seed must fit in 64 bits")
        _check_int("samples", self.samples, 2)
        _check_int("N", self.N, 1)
        _check_pos("T", self.T)
        if isinstance(self.alpha, bool) or not isinstance(self.alpha, (int, float)):
            raise MalformedInputError("alpha must be a number")
        if self.mode not in ("walk", "gauss"):
            raise MalformedInputError(f"mode must be 'walk' or 'gauss', got {self.mode!r}")
        _check_int("grid_k", self.grid_k, 4)
        if self.grid_k % 2:
            raise MalformedInputError("grid_k must be even")
        if self.thin is not None:
            _check_int("thin", self.thin, 1)
        _check_int("trajectory_samples", self.trajectory_samples, 1)
        if self.trajectory_samples > self.samples:
            raise MalformedInputError("trajectory_samples cannot exceed samples")
        if self.correlation is not None:
            rows = self.correlation
            if not (isinstance(rows, list) and len(rows) == 3 and all(isinstance(r, list) and len(r) == 3 for r in rows)):
                raise MalformedInputError("correlation must be a 3x3 nested list")
        _check_pos("tol", self.tol)


@dataclass(frozen=True)
class FanConfig(_Config):
    tol: float = 1e-10
    scaling: str = "primitive"

    def __post_init__(self):
        _check_pos("tol", self.tol)
        if self.scaling not in ("primitive", "unit"):
            raise MalformedInputError("scaling must be 'primitive' or 'unit'")


@dataclass(frozen=True)
class TreeConfig(_Config):
    mode: str = "equivalence"
    tol: float = 1e-7
    grid_k: int = 720
    guard: int = 1_000_000

    def __post_init__(self):
        if self.mode not in TREE_MODES:
            raise MalformedInputError(f"mode must be one of {TREE_MODES}")
        _check_pos("tol", self.tol)
        _check_int("grid_k", self.grid_k, 4)
        _check_int("guard", self.guard, 1)


@dataclass(frozen=True)
class VerifyConfig(_Config):
    suite: str = "all"
    seed: int = 1
    samples: int = 20_000
    tol: float = 1e-9

    def __post_init__(self):
        if self.suite not in SUITES:
            raise MalformedInputError(f"suite must be one of {SUITES}")
        _check_int("seed", self.seed, 0)
        _check_int("samples", self.samples, 2)
        _check_pos("tol", self.tol)
