"""Simulated annealing as a variation + replacement kernel with cooling.

The run-time algorithm follows the classic Metropolis loop; in elitist
mode the population carries the best point found so far next to the
Metropolis walker, so the reported closeness never worsens.  For exact
verification on finite spaces, ``sa_chain_kernel`` realizes the one-step
kernel as a matrix: the elitist variant keeps the better of the
candidate/incumbent pair (sort the pair, project the head), which is the
replacement whose eps-neighborhoods are absorbing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .core import Algorithm, ContinuousBox, FiniteSet, Population, Problem
from .errors import ConfigError, UsageError
from .kernels import Kernel, ScheduleState
from .mutation import FiniteProposal


@dataclass(frozen=True)
class Cooling:
    """Temperature schedule; the update maps T into [0, T].

    Kinds: ``geometric`` (T0 * gamma^t), ``linear`` (T0 - t*step, floored),
    ``logarithmic`` (c / ln(t + 2)).  ``temperature(t)`` is the closed form
    after t update steps; the per-step rule reproduces it exactly.
    """

    kind: str
    t0: float
    gamma: float = 0.95
    step: float = 0.0
    floor: float = 0.0
    c: float = 0.0

    def __post_init__(self) -> None:
        if self.t0 <= 0:
            raise ConfigError("initial temperature must be positive")
        if self.kind == "geometric":
            if not 0.0 < self.gamma < 1.0:
                raise ConfigError("geometric cooling needs gamma in (0, 1)")
        elif self.kind == "linear":
            if self.step <= 0:
                raise ConfigError("linear cooling needs step > 0")
            if self.floor < 0:
                raise ConfigError("linear cooling floor must be >= 0")
        elif self.kind == "logarithmic":
            if self.c <= 0:
                raise ConfigError("logarithmic cooling needs c > 0")
        else:
            raise ConfigError(f"unknown cooling kind {self.kind!r}")

    def temperature(self, t: int) -> float:
        if self.kind == "geometric":
            return self.t0 * self.gamma**t
        if self.kind == "linear":
            return max(self.t0 - t * self.step, self.floor)
        return self.c / math.log(t + 2.0)

    def alpha(self, temperature: float, t: int) -> float:
        """Per-step update rule: T_{t+1} from (T_t, t)."""
        return self.temperature(t + 1)


def geometric(t0: float, gamma: float = 0.95) -> Cooling:
    return Cooling("geometric", t0, gamma=gamma)


def linear(t0: float, step: float, floor: float = 0.0) -> Cooling:
    return Cooling("linear", t0, step=step, floor=floor)


def logarithmic(c: float) -> Cooling:
    return Cooling("logarithmic", c / math.log(2.0), c=c)


def fixed(t0: float) -> Cooling:
    """Constant temperature (a linear schedule floored at T0)."""
    return Cooling("linear", t0, step=1.0, floor=t0)


@dataclass(frozen=True)
class SAConfig:
    """Neighborhood, cooling, and elitism switches.

    ``sigma`` scales the isotropic Gaussian step on boxes.  ``mutation``
    selects the finite-space proposal: None for uniform over the space,
    a probability vector for a state-independent proposal, or a square
    matrix of per-state proposal rows (all mass strictly positive).
    """

    schedule: Cooling
    sigma: float = 0.1
    mutation: Any = None
    elitist: bool = True

    def __post_init__(self) -> None:
        if self.sigma <= 0:
            raise ConfigError("neighborhood sigma must be positive")


def finite_proposal(problem: Problem, config: SAConfig) -> FiniteProposal:
    if not isinstance(problem.space, FiniteSet):
        raise UsageError("finite proposal requires a finite space")
    return FiniteProposal(problem.space.points, config.mutation)


def variate_sa(problem: Problem, x: Any, config: SAConfig, rng: np.random.Generator) -> Any:
    """Propose a neighbor: Gaussian step reflected into the box, or a draw
    from the finite-space mutation distribution."""
    space = problem.space
    if isinstance(space, ContinuousBox):
        step = config.sigma * rng.standard_normal(space.dim)
        return space.reflect(np.asarray(x, dtype=float) + step)
    return finite_proposal(problem, config).sample(x, rng)


def metropolis_accept(
    problem: Problem,
    f_candidate: float,
    f_incumbent: float,
    temperature: float,
    rng: np.random.Generator,
) -> bool:
    """Metropolis rule: improvements always pass; a worsening of size
    |df| passes with probability exp(-|df|/T).  T <= 0 is the greedy
    limit (strict improvements only); equal fitness is accepted with
    probability one when T > 0."""
    if problem.better(f_candidate, f_incumbent):
        return True
    if f_candidate == f_incumbent:
        return temperature > 0.0
    if temperature <= 0.0:
        return False
    return rng.random() < math.exp(-abs(f_candidate - f_incumbent) / temperature)


def acceptance_probability(
    problem: Problem, f_candidate: float, f_incumbent: float, temperature: float
) -> float:
    """Exact acceptance probability of ``metropolis_accept``."""
    if problem.better(f_candidate, f_incumbent):
        return 1.0
    if f_candidate == f_incumbent:
        return 1.0 if temperature > 0.0 else 0.0
    if temperature <= 0.0:
        return 0.0
    return math.exp(-abs(f_candidate - f_incumbent) / temperature)


def replace_sa(
    problem: Problem,
    candidate: Any,
    incumbent: Any,
    temperature: float,
    rng: np.random.Generator,
    elitist: bool = False,
    best: Any = None,
):
    """Metropolis replacement between candidate and incumbent.

    With ``elitist=True`` the return value is ``(next_point, next_best)``
    where the best-so-far additionally absorbs the candidate; otherwise
    just the next point.
    """
    f_cand = problem.evaluate(candidate)
    f_inc = problem.evaluate(incumbent)
    accepted = metropolis_accept(problem, f_cand, f_inc, temperature, rng)
    chosen = candidate if accepted else incumbent
    if not elitist:
        return chosen
    if best is None:
        best = incumbent
    next_best = candidate if problem.better(f_cand, problem.evaluate(best)) else best
    return chosen, next_best


def _proposer(problem: Problem, config: SAConfig):
    space = problem.space
    if isinstance(space, ContinuousBox):

        def propose(x, rng):
            return space.reflect(np.asarray(x, dtype=float) + config.sigma * rng.standard_normal(space.dim))

        return propose
    proposal = FiniteProposal(space.points, config.mutation)
    return proposal.sample


def sa_next_pop(problem: Problem, config: SAConfig) -> Kernel:
    """The per-generation kernel run by the annealing loop.

    Non-elitist: a single Metropolis walker (arity 1).  Elitist: the
    walker plus the best-so-far point (arity 2), so closeness is read
    from the best member.  Sampling reads T from the schedule state and
    then advances it (cooling and t+1).
    """
    propose = _proposer(problem, config)

    if config.elitist:

        def sample_fn(members, state, rng):
            current, best_pt = members
            candidate = propose(current, rng)
            nxt, nxt_best = replace_sa(
                problem, candidate, current, state.params["T"], rng,
                elitist=True, best=best_pt,
            )
            state.tick()
            return (nxt, nxt_best)

        return Kernel(2, 2, sample_fn, name="sa-next-pop-elitist")

    def sample_fn(members, state, rng):
        (current,) = members
        candidate = propose(current, rng)
        nxt = replace_sa(problem, candidate, current, state.params["T"], rng)
        state.tick()
        return (nxt,)

    return Kernel(1, 1, sample_fn, name="sa-next-pop")


def sa_variate_kernel(problem: Problem, config: SAConfig) -> Kernel:
    """Variation-only kernel on a finite space, with exact proposal rows."""
    if not isinstance(problem.space, FiniteSet):
        raise ConfigError("the exact variation kernel requires a finite space")
    proposal = FiniteProposal(problem.space.points, config.mutation)

    def sample_fn(members, state, rng):
        (x,) = members
        return (proposal.sample(x, rng),)

    def matrix_fn(space, state):
        if space.points != problem.space.points:
            raise UsageError("kernel and enumeration must share the same point order")
        return np.stack([proposal.row(x) for x in space.points])

    return Kernel(1, 1, sample_fn, matrix_fn, name="sa-variate")


def sa_chain_kernel(problem: Problem, config: SAConfig) -> Kernel:
    """One-step kernel of the annealing chain on a finite space.

    The elitist variant keeps the better of candidate and incumbent
    (candidate wins ties, matching stable pair-sorting); the non-elitist
    variant applies the Metropolis rule at the schedule's current
    temperature.  The exact matrix enumerates every proposal outcome
    directly, staying O(|space|^2).  Sampling does not advance the
    schedule: this kernel is the step-t transition, not the loop.
    """
    if not isinstance(problem.space, FiniteSet):
        raise ConfigError("exact chain extraction requires a finite space")
    proposal = FiniteProposal(problem.space.points, config.mutation)

    def sample_fn(members, state, rng):
        (x,) = members
        candidate = proposal.sample(x, rng)
        if config.elitist:
            keep = problem.better_eq(problem.evaluate(candidate), problem.evaluate(x))
            return (candidate if keep else x,)
        temperature = state.params.get("T", config.schedule.t0)
        f_cand = problem.evaluate(candidate)
        f_inc = problem.evaluate(x)
        ok = metropolis_accept(problem, f_cand, f_inc, temperature, rng)
        return (candidate if ok else x,)

    def matrix_fn(space, state):
        if space.points != problem.space.points:
            raise UsageError("kernel and enumeration must share the same point order")
        n = len(space)
        m = np.zeros((n, n))
        temperature = state.params.get("T", config.schedule.t0)
        fitness = [problem.evaluate(x) for x in space.points]
        for i, x in enumerate(space.points):
            row = proposal.row(x)
            for j in range(n):
                if config.elitist:
                    accept = 1.0 if problem.better_eq(fitness[j], fitness[i]) else 0.0
                else:
                    accept = acceptance_probability(problem, fitness[j], fitness[i], temperature)
                m[i, j] += row[j] * accept
                m[i, i] += row[j] * (1.0 - accept)
        return m

    name = "sa-chain-elitist" if config.elitist else "sa-chain"
    return Kernel(1, 1, sample_fn, matrix_fn, name=name)


def make_sa(problem: Problem, config: SAConfig) -> Algorithm:
    """Assemble the annealing loop for ``run_algorithm``."""
    schedule = config.schedule

    def schedule_factory() -> ScheduleState:
        state = ScheduleState()
        state.register("T", schedule.t0, rule=schedule.alpha)
        return state

    def init(rng: np.random.Generator) -> Population:
        x0 = problem.space.sample_uniform(rng)
        members = (x0, x0) if config.elitist else (x0,)
        return Population.evaluated(members, problem)

    chain = sa_chain_kernel(problem, config) if isinstance(problem.space, FiniteSet) else None

    return Algorithm(
        name="sa-elitist" if config.elitist else "sa",
        problem=problem,
        pop_size=2 if config.elitist else 1,
        init=init,
        next_pop=sa_next_pop(problem, config),
        schedule_factory=schedule_factory,
        param_fn=lambda pop, state: state.params["T"],
        chain_kernel=chain,
    )
