"""Shared fixtures and independent oracles for the test suite."""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from sgoal.core import FiniteSet, Problem, Relation
from sgoal.kernels import FiniteSpace, Kernel, ScheduleState


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def line_problem(values, relation=Relation.MINIMIZE, f_star=None):
    """Finite problem over integer states 0..n-1 with listed fitness values."""
    values = [float(v) for v in values]
    space = FiniteSet(tuple(range(len(values))))
    return Problem(space, lambda i: values[i], relation, f_star=f_star)


def matrix_kernel(matrix: np.ndarray, space: FiniteSpace) -> Kernel:
    """Arity-1 kernel defined by an explicit row-stochastic matrix."""
    matrix = np.asarray(matrix, dtype=float)

    def sample_fn(members, state, rng):
        (x,) = members
        row = matrix[space.index(x)]
        return (space.points[int(rng.choice(len(space), p=row))],)

    def matrix_fn(sp, state):
        return matrix

    return Kernel(1, 1, sample_fn, matrix_fn, name="matrix-kernel")


def random_stochastic(rng, n: int) -> np.ndarray:
    """Random dense row-stochastic matrix (Dirichlet rows)."""
    return rng.dirichlet(np.ones(n), size=n)


def transition_counts(kernel, space, start_members, n_samples, rng, state=None):
    """Sample one-step transitions from a fixed start; counts per end state."""
    if state is None:
        state = ScheduleState()
    counts = np.zeros(space.n_tuples(kernel.arity_out), dtype=int)
    for _ in range(n_samples):
        out = kernel.sample(start_members, state, rng)
        counts[space.tuple_index(out)] += 1
    return counts


def brute_tournament_probs(fitness, relation: Relation, m: int) -> np.ndarray:
    """Oracle: enumerate all lambda^m ordered entrant tuples directly."""
    f = np.asarray(fitness, dtype=float)
    lam = f.size
    probs = np.zeros(lam)
    weight = 1.0 / lam**m
    for entrants in itertools.product(range(lam), repeat=m):
        fs = f[list(entrants)]
        if relation is Relation.MINIMIZE:
            rates = np.array([1.0 + np.sum(fs > v) for v in fs])
        else:
            rates = np.array([1.0 + np.sum(fs < v) for v in fs])
        total = rates.sum()
        for slot, idx in enumerate(entrants):
            probs[idx] += weight * rates[slot] / total
    return probs


def fold_into(value: float, lo: float, hi: float) -> float:
    """Oracle for box reflection: fold one coordinate step by step."""
    v = float(value)
    while v < lo or v > hi:
        if v > hi:
            v = 2.0 * hi - v
        else:
            v = 2.0 * lo - v
    return v
