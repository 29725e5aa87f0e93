"""Stochastic-operator algebra over populations.

A kernel maps an input tuple of points to a random output tuple.  On an
enumerated finite base space every kernel can additionally realize itself
as an exact row-stochastic matrix over tuple states, and the combinators
below (sequential composition, independent join, coordinate projection,
fitness sorting) propagate both the sampler and the matrix.

Matrix convention: distributions are row vectors, so applying kernel K1
and then K2 multiplies as ``M1 @ M2``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Callable, Iterable, Sequence

import numpy as np

from .errors import ConfigError, UsageError

if TYPE_CHECKING:  # pragma: no cover
    from .core import Problem

ROW_SUM_TOL = 1e-12


class ScheduleState:
    """Mutable non-stationary parameters threaded through kernel sampling.

    ``t`` counts completed next-population applications.  Named parameters
    change only through their registered update rule, applied once per
    ``tick``; a rule receives ``(value, t)`` with t the step count before
    the tick.
    """

    def __init__(self, params: dict[str, float] | None = None) -> None:
        self.t: int = 0
        self.params: dict[str, float] = dict(params or {})
        self._rules: dict[str, Callable[[float, int], float]] = {}

    def register(
        self,
        name: str,
        value: float,
        rule: Callable[[float, int], float] | None = None,
    ) -> None:
        self.params[name] = float(value)
        if rule is not None:
            self._rules[name] = rule

    def tick(self) -> None:
        for name, rule in self._rules.items():
            self.params[name] = float(rule(self.params[name], self.t))
        self.t += 1


class FiniteSpace:
    """Enumeration of a finite base set with product-tuple indexing.

    Tuple states of arity a are ordered like ``itertools.product``: the
    first coordinate varies slowest.  That ordering is what makes the
    independent join a plain Kronecker product of rows.
    """

    def __init__(self, points: Iterable[Any]) -> None:
        pts = tuple(points)
        if not pts:
            raise UsageError("finite space must contain at least one point")
        self.points = pts
        self._index = {p: i for i, p in enumerate(pts)}
        if len(self._index) != len(pts):
            raise UsageError("finite-space points must be distinct")
        self._tuples: dict[int, tuple] = {}

    @classmethod
    def from_problem(cls, problem: "Problem") -> "FiniteSpace":
        from .core import FiniteSet

        if not isinstance(problem.space, FiniteSet):
            raise UsageError("exact kernel matrices require a finite search space")
        return cls(problem.space.points)

    def __len__(self) -> int:
        return len(self.points)

    def index(self, point: Any) -> int:
        try:
            return self._index[point]
        except KeyError as exc:
            raise UsageError(f"point {point!r} is not in the enumerated space") from exc

    def n_tuples(self, arity: int) -> int:
        return len(self.points) ** arity

    def tuples(self, arity: int) -> tuple:
        if arity < 1:
            raise UsageError("tuple arity must be >= 1")
        if arity not in self._tuples:
            self._tuples[arity] = tuple(itertools.product(self.points, repeat=arity))
        return self._tuples[arity]

    def tuple_index(self, members: Sequence[Any]) -> int:
        idx = 0
        for m in members:
            idx = idx * len(self.points) + self.index(m)
        return idx


@dataclass(frozen=True)
class Kernel:
    """A time-indexed stochastic operation on tuples of points.

    ``sample_fn(members, state, rng)`` draws one output tuple;
    ``matrix_fn(space, state)``, when present, returns the exact
    row-stochastic matrix over input/output tuple states of the given
    finite base space.
    """

    arity_in: int
    arity_out: int
    sample_fn: Callable[[tuple, ScheduleState, np.random.Generator], tuple]
    matrix_fn: Callable[[FiniteSpace, ScheduleState], np.ndarray] | None = None
    name: str = "kernel"

    def __post_init__(self) -> None:
        if self.arity_in < 1 or self.arity_out < 1:
            raise ConfigError("kernel arities must be positive")

    def sample(
        self, members: Sequence[Any], state: ScheduleState, rng: np.random.Generator
    ) -> tuple:
        members = tuple(members)
        if len(members) != self.arity_in:
            raise UsageError(
                f"{self.name}: expected input tuple of length {self.arity_in}, "
                f"got {len(members)}"
            )
        out = tuple(self.sample_fn(members, state, rng))
        if len(out) != self.arity_out:
            raise UsageError(f"{self.name}: sampler produced wrong output arity")
        return out

    @property
    def has_matrix(self) -> bool:
        return self.matrix_fn is not None

    def exact_matrix(
        self, space: FiniteSpace, state: ScheduleState | None = None
    ) -> np.ndarray:
        if self.matrix_fn is None:
            raise UsageError(f"{self.name} has no exact matrix realization")
        if state is None:
            state = ScheduleState()
        m = np.asarray(self.matrix_fn(space, state), dtype=float)
        expected = (space.n_tuples(self.arity_in), space.n_tuples(self.arity_out))
        if m.shape != expected:
            raise UsageError(
                f"{self.name}: matrix shape {m.shape} does not match tuple "
                f"spaces {expected}"
            )
        check_row_stochastic(m, name=self.name)
        return m


def check_row_stochastic(m: np.ndarray, tol: float = ROW_SUM_TOL, name: str = "matrix") -> None:
    """Raise unless every row is a probability vector within ``tol``."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise UsageError(f"{name}: expected a 2-d matrix")
    if np.any(m < -tol):
        raise UsageError(f"{name}: negative transition mass")
    sums = m.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > tol):
        worst = float(np.max(np.abs(sums - 1.0)))
        raise UsageError(f"{name}: rows must sum to 1 (worst deviation {worst:.3e})")


# ---------------------------------------------------------------------------
# Combinators.


def compose(k2: Kernel, k1: Kernel) -> Kernel:
    """Sequential composition: apply ``k1`` first, then ``k2``.

    The exact matrix, when both factors have one, is ``M1 @ M2``.
    """
    if k1.arity_out != k2.arity_in:
        raise ConfigError(
            f"cannot compose {k2.name} after {k1.name}: "
            f"{k1.name} emits {k1.arity_out}, {k2.name} expects {k2.arity_in}"
        )

    def sample_fn(members, state, rng):
        return k2.sample(k1.sample(members, state, rng), state, rng)

    matrix_fn = None
    if k1.has_matrix and k2.has_matrix:

        def matrix_fn(space, state):
            return k1.exact_matrix(space, state) @ k2.exact_matrix(space, state)

    return Kernel(
        arity_in=k1.arity_in,
        arity_out=k2.arity_out,
        sample_fn=sample_fn,
        matrix_fn=matrix_fn,
        name=f"({k2.name} . {k1.name})",
    )


def join(kernels: Sequence[Kernel]) -> Kernel:
    """Independent parallel application of single-output kernels.

    Every component reads the same input tuple and contributes one output
    coordinate; the joint matrix row is the Kronecker product of the
    component rows.
    """
    kernels = list(kernels)
    if not kernels:
        raise ConfigError("join requires at least one kernel")
    arity_in = kernels[0].arity_in
    for k in kernels:
        if k.arity_in != arity_in:
            raise ConfigError("joined kernels must share their input arity")
        if k.arity_out != 1:
            raise ConfigError("joined kernels must each emit a single point")
    if len(kernels) == 1:
        return kernels[0]

    def sample_fn(members, state, rng):
        return tuple(k.sample(members, state, rng)[0] for k in kernels)

    matrix_fn = None
    if all(k.has_matrix for k in kernels):

        def matrix_fn(space, state):
            parts = [k.exact_matrix(space, state) for k in kernels]
            rows = []
            for r in range(space.n_tuples(arity_in)):
                row = parts[0][r]
                for p in parts[1:]:
                    row = np.kron(row, p[r])
                rows.append(row)
            return np.vstack(rows)

    return Kernel(
        arity_in=arity_in,
        arity_out=len(kernels),
        sample_fn=sample_fn,
        matrix_fn=matrix_fn,
        name="join(" + ", ".join(k.name for k in kernels) + ")",
    )


def _deterministic_matrix(space, arity_in, arity_out, transform):
    n_in = space.n_tuples(arity_in)
    n_out = space.n_tuples(arity_out)
    m = np.zeros((n_in, n_out))
    for r, members in enumerate(space.tuples(arity_in)):
        m[r, space.tuple_index(transform(members))] = 1.0
    return m


def projection(arity_in: int, indices: Sequence[int]) -> Kernel:
    """Deterministic kernel emitting the selected coordinates in order."""
    indices = tuple(int(i) for i in indices)
    if not indices:
        raise ConfigError("projection needs at least one index")
    for i in indices:
        if i < 0 or i >= arity_in:
            raise ConfigError(f"projection index {i} out of range for arity {arity_in}")

    def transform(members):
        return tuple(members[i] for i in indices)

    return Kernel(
        arity_in=arity_in,
        arity_out=len(indices),
        sample_fn=lambda members, state, rng: transform(members),
        matrix_fn=lambda space, state: _deterministic_matrix(
            space, arity_in, len(indices), transform
        ),
        name=f"proj{list(indices)}",
    )


def identity(arity: int) -> Kernel:
    return projection(arity, range(arity))


def sort_kernel(problem: "Problem", arity: int) -> Kernel:
    """Deterministic stable sort, best fitness first under the problem's relation.

    Ties keep their original relative order, matching the first-occurrence
    tie-break of the best operator.
    """
    if arity < 1:
        raise ConfigError("sort arity must be >= 1")

    def transform(members):
        if problem.relation.value == "minimize":
            return tuple(sorted(members, key=problem.evaluate))
        return tuple(sorted(members, key=lambda m: -problem.evaluate(m)))

    return Kernel(
        arity_in=arity,
        arity_out=arity,
        sample_fn=lambda members, state, rng: transform(members),
        matrix_fn=lambda space, state: _deterministic_matrix(space, arity, arity, transform),
        name=f"sort{arity}",
    )


# ---------------------------------------------------------------------------
# Iterated products of (possibly time-varying) transition matrices.


def _validated_square(matrices: Sequence[np.ndarray]) -> list[np.ndarray]:
    if not matrices:
        raise UsageError("need at least one transition matrix")
    out = []
    size = None
    for m in matrices:
        m = np.asarray(m, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise UsageError("transition matrices must be square")
        if size is None:
            size = m.shape[0]
        elif m.shape[0] != size:
            raise UsageError("all transition matrices must share one state space")
        check_row_stochastic(m)
        out.append(m)
    return out


def iterated_products(
    matrices: Sequence[np.ndarray], t_max: int, order: str = "recursion"
) -> list[np.ndarray]:
    """Ordered products P_1..P_{t_max} of a kernel sequence.

    ``order="recursion"`` follows the non-stationary case split
    P_t = M_t @ P_{t-1} (the step-t kernel applied at the outer step);
    ``order="composition"`` is the opposite reading P_t = P_{t-1} @ M_t.
    A single matrix is reused for every step (stationary chain);
    otherwise the sequence must cover ``t_max`` steps.
    """
    ms = _validated_square(matrices)
    if order not in ("recursion", "composition"):
        raise UsageError("order must be 'recursion' or 'composition'")
    if t_max < 1:
        raise UsageError("t_max must be >= 1")
    if len(ms) == 1:
        ms = ms * t_max
    elif len(ms) < t_max:
        raise UsageError(
            f"non-stationary sequence has {len(ms)} kernels but t_max={t_max}"
        )
    out = [ms[0]]
    for t in range(1, t_max):
        prev = out[-1]
        out.append(ms[t] @ prev if order == "recursion" else prev @ ms[t])
    return out


def iterate_nonstationary(
    matrices: Sequence[np.ndarray],
    x: int,
    targets: Sequence[int],
    t: int | None = None,
    order: str = "recursion",
) -> float:
    """Probability of landing in ``targets`` after ``t`` steps from state ``x``."""
    ms = _validated_square(matrices)
    if t is None:
        t = len(ms)
    targets = np.asarray(sorted(set(int(i) for i in targets)), dtype=int)
    size = ms[0].shape[0]
    if x < 0 or x >= size:
        raise UsageError("start state out of range")
    if targets.size and (targets.min() < 0 or targets.max() >= size):
        raise UsageError("target state out of range")
    product = iterated_products(ms, t, order=order)[-1]
    return float(product[x, targets].sum())


# ---------------------------------------------------------------------------
# Plain-text matrix exchange format: header "rows cols", then row-major reals.


def save_matrix(path, m: np.ndarray) -> None:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise UsageError("can only save 2-d matrices")
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{m.shape[0]} {m.shape[1]}\n")
        for row in m:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def load_matrix(path) -> np.ndarray:
    with open(path, "r", encoding="ascii") as fh:
        tokens = fh.read().split()
    if len(tokens) < 2:
        raise UsageError("matrix file must start with 'rows cols'")
    rows, cols = int(tokens[0]), int(tokens[1])
    values = [float(v) for v in tokens[2:]]
    if len(values) != rows * cols:
        raise UsageError(
            f"matrix file promises {rows}x{cols} entries but carries {len(values)}"
        )
    return np.array(values, dtype=float).reshape(rows, cols)
