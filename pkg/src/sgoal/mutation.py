"""Finite-space proposal distributions with strictly positive support.

A proposal is what the variation step of an annealer or a finite-space
evolution strategy draws its candidate states from.  Keeping every state
reachable with positive mass is what gives the one-step kernel a uniform
lower bound on hitting the near-optimal set.
"""

from __future__ import annotations

from typing import Any, Sequence

import numpy as np

from .errors import ConfigError, UsageError


class FiniteProposal:
    """Proposal over an enumerated point set.

    ``spec`` is None for the uniform distribution, a probability vector
    for a state-independent proposal, or a row-stochastic square matrix
    of per-state proposals.  All mass must be strictly positive.
    """

    def __init__(self, points: Sequence[Any], spec=None) -> None:
        self.points = tuple(points)
        n = len(self.points)
        if n == 0:
            raise UsageError("proposal needs a nonempty point set")
        self._index: dict | None = None
        if spec is None:
            self.kind = "uniform"
            self.vector = None
            self.matrix = None
            return
        arr = np.asarray(spec, dtype=float)
        if arr.ndim == 1:
            if arr.size != n:
                raise ConfigError("mutation vector length must match the space size")
            self._validate(arr[None, :])
            self.kind = "vector"
            self.vector = arr / arr.sum()
            self.matrix = None
        elif arr.ndim == 2:
            if arr.shape != (n, n):
                raise ConfigError("mutation matrix must be square over the space")
            self._validate(arr)
            self.kind = "matrix"
            self.vector = None
            self.matrix = arr / arr.sum(axis=1, keepdims=True)
        else:
            raise ConfigError("mutation must be a probability vector or matrix")

    @staticmethod
    def _validate(rows: np.ndarray) -> None:
        if np.any(rows <= 0):
            raise ConfigError(
                "finite-space mutation needs strictly positive mass on every state"
            )
        if np.any(np.abs(rows.sum(axis=1) - 1.0) > 1e-9):
            raise ConfigError("mutation rows must sum to 1")

    def index(self, x: Any) -> int:
        if self._index is None:
            self._index = {p: i for i, p in enumerate(self.points)}
        try:
            return self._index[x]
        except KeyError as exc:
            raise UsageError(f"point {x!r} not in the finite space") from exc

    def sample(self, x: Any, rng: np.random.Generator) -> Any:
        n = len(self.points)
        if self.kind == "uniform":
            return self.points[int(rng.integers(n))]
        if self.kind == "vector":
            return self.points[int(rng.choice(n, p=self.vector))]
        return self.points[int(rng.choice(n, p=self.matrix[self.index(x)]))]

    def row(self, x: Any) -> np.ndarray:
        """Exact proposal distribution from state ``x`` (length |space|)."""
        n = len(self.points)
        if self.kind == "uniform":
            return np.full(n, 1.0 / n)
        if self.kind == "vector":
            return self.vector
        return self.matrix[self.index(x)]

    @property
    def min_mass(self) -> float:
        if self.kind == "uniform":
            return 1.0 / len(self.points)
        if self.kind == "vector":
            return float(self.vector.min())
        return float(self.matrix.min())
