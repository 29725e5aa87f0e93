"""(mu/rho +, lambda) evolution strategies with self-adaptive step sizes.

Each generation draws lambda children independently: pick rho parents
uniformly with replacement, recombine object and strategy parameters,
mutate the step sizes log-normally, then perturb the object parameters
with the fresh step sizes.  Plus replacement pools parents and children;
comma replacement keeps children only (lambda >= mu required).

On finite spaces the strategy machinery collapses: a child is a draw from
the mutation proposal of a uniformly picked parent (rho = 1), which keeps
every state reachable and makes the plus-mode chain exactly analyzable.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .core import Algorithm, ContinuousBox, FiniteSet, Population, Problem
from .errors import ConfigError, UsageError
from .kernels import Kernel, ScheduleState
from .mutation import FiniteProposal


@dataclass(frozen=True)
class ESIndividual:
    """Object parameters, per-coordinate step sizes, cached fitness."""

    y: np.ndarray
    s: np.ndarray
    f: float

    def __post_init__(self) -> None:
        y = np.asarray(self.y, dtype=float)
        s = np.asarray(self.s, dtype=float)
        if y.shape != s.shape or y.ndim != 1:
            raise UsageError("object and strategy vectors must share one shape")
        if np.any(s <= 0):
            raise UsageError("step sizes must be strictly positive")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "f", float(self.f))


@dataclass(frozen=True)
class ESConfig:
    mu: int
    rho: int
    lam: int
    mode: str = "plus"
    tau: float | None = None
    sigma_init: float = 1.0
    sigma_min: float = 1e-8
    sigma_max: float = 1e3
    recomb_y: str = "discrete"
    recomb_s: str = "intermediate"
    mutation: Any = None

    def __post_init__(self) -> None:
        if self.mu < 1 or self.rho < 1 or self.lam < 1:
            raise ConfigError("mu, rho, lambda must be positive")
        if self.rho > self.mu:
            raise ConfigError("rho cannot exceed mu")
        if self.mode not in ("plus", "comma"):
            raise ConfigError("mode must be 'plus' or 'comma'")
        if self.mode == "comma" and self.lam < self.mu:
            raise ConfigError("comma replacement requires lambda >= mu")
        if self.tau is not None and self.tau < 0:
            raise ConfigError("tau must be nonnegative")
        if not (0 < self.sigma_min <= self.sigma_max):
            raise ConfigError("need 0 < sigma_min <= sigma_max")
        for label, value in (("recomb_y", self.recomb_y), ("recomb_s", self.recomb_s)):
            if value not in ("discrete", "intermediate"):
                raise ConfigError(f"{label} must be 'discrete' or 'intermediate'")

    def tau_for(self, dim: int) -> float:
        return self.tau if self.tau is not None else 1.0 / math.sqrt(2.0 * dim)


def pick_parents(members: Sequence[Any], rho: int, rng: np.random.Generator) -> tuple:
    """rho uniform draws from the population, with replacement."""
    members = tuple(members)
    if rho > len(members):
        raise ConfigError("cannot pick more parents than the population holds")
    idx = rng.integers(0, len(members), size=rho)
    return tuple(members[int(i)] for i in idx)


def _recombine_vectors(vectors: np.ndarray, mode: str, rng: np.random.Generator) -> np.ndarray:
    if vectors.shape[0] == 1:
        return vectors[0].copy()
    if mode == "intermediate":
        return vectors.mean(axis=0)
    picks = rng.integers(0, vectors.shape[0], size=vectors.shape[1])
    return vectors[picks, np.arange(vectors.shape[1])]


def recombine(
    parents: Sequence[ESIndividual],
    recomb_y: str,
    recomb_s: str,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Blend rho parents into one (y, s) pair; rho = 1 is the identity."""
    parents = tuple(parents)
    if not parents:
        raise UsageError("recombination needs at least one parent")
    ys = np.stack([p.y for p in parents])
    ss = np.stack([p.s for p in parents])
    return (
        _recombine_vectors(ys, recomb_y, rng),
        _recombine_vectors(ss, recomb_s, rng),
    )


def update_strategies(
    s: np.ndarray,
    tau: float,
    sigma_min: float,
    sigma_max: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Log-normal self-adaptation with one global and d coordinate draws,
    clamped into [sigma_min, sigma_max]."""
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise UsageError("step sizes must be strictly positive")
    g = rng.standard_normal()
    locals_ = rng.standard_normal(s.size)
    return np.clip(s * np.exp(tau * g + tau * locals_), sigma_min, sigma_max)


def mutate_y(
    problem: Problem, y: np.ndarray, s_new: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Gaussian object mutation with the fresh step sizes, reflected into the box."""
    if not isinstance(problem.space, ContinuousBox):
        raise UsageError("object-parameter mutation applies to box spaces")
    y = np.asarray(y, dtype=float)
    return problem.space.reflect(y + np.asarray(s_new) * rng.standard_normal(y.size))


def next_sub_pop(
    problem: Problem,
    members: Sequence[ESIndividual],
    config: ESConfig,
    state: ScheduleState,
    rng: np.random.Generator,
) -> ESIndividual:
    """One child: marriage, recombination, strategy update, mutation, evaluation."""
    parents = pick_parents(members, config.rho, rng)
    y, s = recombine(parents, config.recomb_y, config.recomb_s, rng)
    tau = config.tau_for(y.size)
    s_new = update_strategies(s, tau, config.sigma_min, config.sigma_max, rng)
    y_new = mutate_y(problem, y, s_new, rng)
    return ESIndividual(y_new, s_new, problem.evaluate(y_new))


def variate_es(
    problem: Problem,
    members: Sequence[ESIndividual],
    config: ESConfig,
    state: ScheduleState,
    rng: np.random.Generator,
) -> tuple:
    """lambda independent children from the same parent population."""
    return tuple(
        next_sub_pop(problem, members, config, state, rng) for _ in range(config.lam)
    )


def _fitness_of(problem: Problem, member: Any) -> float:
    if isinstance(member, ESIndividual):
        return member.f
    return problem.evaluate(member)


def replace_es(
    problem: Problem,
    parents: Sequence[Any],
    children: Sequence[Any],
    mode: str,
) -> tuple:
    """Deterministic survivor selection.

    Plus: stable-sort parents + children best-first and keep the first mu
    (parents precede children, so ties favor parents).  Comma: the same
    over children only.
    """
    parents = tuple(parents)
    children = tuple(children)
    mu = len(parents)
    if mode == "plus":
        pool = parents + children
    elif mode == "comma":
        if len(children) < mu:
            raise ConfigError("comma replacement requires lambda >= mu")
        pool = children
    else:
        raise ConfigError("mode must be 'plus' or 'comma'")
    if problem.relation.value == "minimize":
        ordered = sorted(pool, key=lambda m: _fitness_of(problem, m))
    else:
        ordered = sorted(pool, key=lambda m: -_fitness_of(problem, m))
    return tuple(ordered[:mu])


def _next_sub_pop_finite(
    problem: Problem,
    members: Sequence[Any],
    proposal: FiniteProposal,
    rng: np.random.Generator,
) -> Any:
    (parent,) = pick_parents(members, 1, rng)
    return proposal.sample(parent, rng)


def es_next_pop(problem: Problem, config: ESConfig) -> Kernel:
    """Per-generation kernel: variate then replace, then advance the clock."""
    finite = isinstance(problem.space, FiniteSet)
    if finite:
        if config.rho != 1:
            raise ConfigError("finite-space strategies support rho = 1 only")
        proposal = FiniteProposal(problem.space.points, config.mutation)

        def sample_fn(members, state, rng):
            children = tuple(
                _next_sub_pop_finite(problem, members, proposal, rng)
                for _ in range(config.lam)
            )
            out = replace_es(problem, members, children, config.mode)
            state.tick()
            return out

    else:

        def sample_fn(members, state, rng):
            children = variate_es(problem, members, config, state, rng)
            out = replace_es(problem, members, children, config.mode)
            state.tick()
            return out

    return Kernel(config.mu, config.mu, sample_fn, name=f"es-next-pop-{config.mode}")


def _finite_mixture_rows(problem: Problem, config: ESConfig, space) -> np.ndarray:
    """Per-population-state child distribution: uniform parent pick, then
    the proposal row of that parent."""
    proposal = FiniteProposal(problem.space.points, config.mutation)
    rows = np.stack([proposal.row(x) for x in space.points])
    out = np.zeros((space.n_tuples(config.mu), len(space)))
    for r, pop in enumerate(space.tuples(config.mu)):
        out[r] = np.mean([rows[space.index(p)] for p in pop], axis=0)
    return out


def es_next_sub_pop_kernel(problem: Problem, config: ESConfig) -> Kernel:
    """Single-child kernel of a finite-space strategy, with exact rows."""
    if not isinstance(problem.space, FiniteSet):
        raise ConfigError("the exact child kernel requires a finite space")
    if config.rho != 1:
        raise ConfigError("finite-space strategies support rho = 1 only")
    proposal = FiniteProposal(problem.space.points, config.mutation)

    def sample_fn(members, state, rng):
        return (_next_sub_pop_finite(problem, members, proposal, rng),)

    def matrix_fn(space, state):
        if space.points != problem.space.points:
            raise UsageError("kernel and enumeration must share the same point order")
        return _finite_mixture_rows(problem, config, space)

    return Kernel(config.mu, 1, sample_fn, matrix_fn, name="es-next-sub-pop")


def es_variate_kernel(problem: Problem, config: ESConfig, cap: int = 4096) -> Kernel:
    """lambda-children variation kernel of a finite-space strategy.

    The exact matrix is the lambda-fold product of the per-child mixture
    row (children are i.i.d. given the parents).
    """
    if not isinstance(problem.space, FiniteSet):
        raise ConfigError("the exact variation kernel requires a finite space")
    if config.rho != 1:
        raise ConfigError("finite-space strategies support rho = 1 only")
    proposal = FiniteProposal(problem.space.points, config.mutation)
    lam = config.lam

    def sample_fn(members, state, rng):
        return tuple(
            _next_sub_pop_finite(problem, members, proposal, rng) for _ in range(lam)
        )

    def matrix_fn(space, state):
        if space.points != problem.space.points:
            raise UsageError("kernel and enumeration must share the same point order")
        if len(space) ** lam > cap:
            raise UsageError(
                f"{len(space)}^{lam} child tuples exceed the exact-enumeration "
                f"cap {cap}; use a smaller instance"
            )
        mixtures = _finite_mixture_rows(problem, config, space)
        rows = []
        for r in range(space.n_tuples(config.mu)):
            row = mixtures[r]
            for _ in range(lam - 1):
                row = np.kron(row, mixtures[r])
            rows.append(row)
        return np.vstack(rows)

    return Kernel(config.mu, lam, sample_fn, matrix_fn, name="es-variate")


def es_chain_kernel(problem: Problem, config: ESConfig, cap: int = 4096) -> Kernel:
    """Exact one-step kernel of a finite-space strategy.

    Children are i.i.d. draws from the parent-mixture proposal, and
    replacement is deterministic, so the matrix row of a population state
    enumerates all |space|^lambda child tuples with product probabilities.
    Sampling does not advance the schedule.
    """
    if not isinstance(problem.space, FiniteSet):
        raise ConfigError("exact chain extraction requires a finite space")
    if config.rho != 1:
        raise ConfigError("finite-space strategies support rho = 1 only")
    proposal = FiniteProposal(problem.space.points, config.mutation)
    mu, lam = config.mu, config.lam

    def sample_fn(members, state, rng):
        children = tuple(
            _next_sub_pop_finite(problem, members, proposal, rng) for _ in range(lam)
        )
        return replace_es(problem, members, children, config.mode)

    def matrix_fn(space, state):
        if space.points != problem.space.points:
            raise UsageError("kernel and enumeration must share the same point order")
        n = len(space)
        if n**lam > cap:
            raise UsageError(
                f"{n}^{lam} child tuples exceed the exact-enumeration cap {cap}; "
                "use a smaller instance"
            )
        m = np.zeros((space.n_tuples(mu), space.n_tuples(mu)))
        child_tuples = list(itertools.product(range(n), repeat=lam))
        mixtures = _finite_mixture_rows(problem, config, space)
        for r, pop in enumerate(space.tuples(mu)):
            mix = mixtures[r]
            for combo in child_tuples:
                p = 1.0
                for c in combo:
                    p *= mix[c]
                children = tuple(space.points[c] for c in combo)
                survivors = replace_es(problem, pop, children, config.mode)
                m[r, space.tuple_index(survivors)] += p
        return m

    return Kernel(mu, mu, sample_fn, matrix_fn, name=f"es-chain-{config.mode}")


def init_es_population(
    problem: Problem, config: ESConfig, rng: np.random.Generator
) -> Population:
    """mu fresh individuals: uniform in the box with sigma_init step sizes,
    or uniform finite states."""
    space = problem.space
    if isinstance(space, ContinuousBox):
        members = []
        sigma0 = min(max(config.sigma_init, config.sigma_min), config.sigma_max)
        for _ in range(config.mu):
            y = space.sample_uniform(rng)
            ind = ESIndividual(y, np.full(space.dim, sigma0), problem.evaluate(y))
            members.append(ind)
        return Population(tuple(members), np.array([m.f for m in members]))
    members = tuple(space.sample_uniform(rng) for _ in range(config.mu))
    return Population.evaluated(members, problem)


def mean_sigma(pop: Population) -> float:
    """Average step size across a population of individuals (NaN if none)."""
    sigmas = [float(np.mean(m.s)) for m in pop.members if isinstance(m, ESIndividual)]
    return float(np.mean(sigmas)) if sigmas else math.nan


def make_es(problem: Problem, config: ESConfig) -> Algorithm:
    """Assemble the evolution strategy for ``run_algorithm``."""
    finite = isinstance(problem.space, FiniteSet)

    chain = None
    if finite and config.rho == 1:
        chain = es_chain_kernel(problem, config)

    return Algorithm(
        name=f"es-{config.mode}",
        problem=problem,
        pop_size=config.mu,
        init=lambda rng: init_es_population(problem, config, rng),
        next_pop=es_next_pop(problem, config),
        schedule_factory=ScheduleState,
        fitness_of=None if finite else (lambda m: m.f),
        param_fn=None if finite else (lambda pop, state: mean_sigma(pop)),
        chain_kernel=chain,
    )
