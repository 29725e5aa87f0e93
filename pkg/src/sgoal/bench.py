"""Desk-scale test problems with exactly known optima."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Any

import numpy as np

from .core import ContinuousBox, FiniteSet, Problem, Relation
from .errors import UsageError

MAX_BITS = 20  # finite spaces are fully enumerated: 2^bits states


def sphere(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.sum(x * x))


def rastrigin(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    return float(10.0 * x.size + np.sum(x * x - 10.0 * np.cos(2.0 * np.pi * x)))


def rosenbrock(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1.0 - x[:-1]) ** 2))


def onemax(bits) -> float:
    return float(sum(bits))


def trap5(bits) -> float:
    # deceptive 5-bit trap per block: all-ones scores 5, otherwise 4 - ones
    total = 0.0
    for start in range(0, len(bits), 5):
        u = sum(bits[start : start + 5])
        total += 5.0 if u == 5 else 4.0 - u
    return total


def _bit_space(dim: int) -> FiniteSet:
    if dim > MAX_BITS:
        raise UsageError(f"bit-string spaces are enumerated; dim must be <= {MAX_BITS}")
    return FiniteSet(tuple(itertools.product((0, 1), repeat=dim)))


@dataclass(frozen=True)
class BenchmarkProblem:
    name: str
    problem: Problem
    f_star: float
    x_star: Any


def make_benchmark(name: str, dim: int) -> BenchmarkProblem:
    """Benchmark by name: sphere / rastrigin / rosenbrock on boxes,
    onemax / trap5 on enumerated bit strings (both maximized)."""
    if dim < 1:
        raise UsageError("dim must be >= 1")
    if name == "sphere":
        box = ContinuousBox(np.full(dim, -5.12), np.full(dim, 5.12))
        problem = Problem(box, sphere, Relation.MINIMIZE, f_star=0.0)
        return BenchmarkProblem(name, problem, 0.0, np.zeros(dim))
    if name == "rastrigin":
        box = ContinuousBox(np.full(dim, -5.12), np.full(dim, 5.12))
        problem = Problem(box, rastrigin, Relation.MINIMIZE, f_star=0.0)
        return BenchmarkProblem(name, problem, 0.0, np.zeros(dim))
    if name == "rosenbrock":
        box = ContinuousBox(np.full(dim, -2.048), np.full(dim, 2.048))
        problem = Problem(box, rosenbrock, Relation.MINIMIZE, f_star=0.0)
        return BenchmarkProblem(name, problem, 0.0, np.ones(dim))
    if name == "onemax":
        problem = Problem(_bit_space(dim), onemax, Relation.MAXIMIZE, f_star=float(dim))
        return BenchmarkProblem(name, problem, float(dim), (1,) * dim)
    if name == "trap5":
        if dim % 5 != 0:
            raise UsageError("trap5 needs dim to be a multiple of 5")
        problem = Problem(_bit_space(dim), trap5, Relation.MAXIMIZE, f_star=float(dim))
        return BenchmarkProblem(name, problem, float(dim), (1,) * dim)
    raise UsageError(f"unknown benchmark {name!r}")


BENCHMARKS = ("sphere", "rastrigin", "rosenbrock", "onemax", "trap5")
