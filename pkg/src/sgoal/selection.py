"""Selection schemes with exact probabilities and mechanism samplers.

Each scheme exposes both the exact per-individual selection probability
vector and a sampler that simulates the actual mechanism (not the exact
vector), so the two can be cross-checked statistically.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import Population, Relation
from .errors import UsageError

PROB_TOL = 1e-12


@dataclass(frozen=True)
class SelectionScheme:
    """One of: uniform, proportional, tournament(m), roulette, ranking.

    ``rate_fn`` maps a fitness value to a nonnegative selection rate and
    applies to roulette (default: the raw fitness, which requires
    maximization over nonnegative values) and proportional (default:
    ranking rates).  Tournament uses ranking rates inside the tournament.
    """

    kind: str
    m: int = 2
    rate_fn: Callable[[float], float] | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("uniform", "proportional", "tournament", "roulette", "ranking"):
            raise UsageError(f"unknown selection scheme {self.kind!r}")
        if self.kind == "tournament" and self.m < 1:
            raise UsageError("tournament size must be >= 1")


def uniform() -> SelectionScheme:
    return SelectionScheme("uniform")


def proportional(rate_fn: Callable[[float], float] | None = None) -> SelectionScheme:
    return SelectionScheme("proportional", rate_fn=rate_fn)


def tournament(m: int = 2) -> SelectionScheme:
    return SelectionScheme("tournament", m=m)


def roulette(rate_fn: Callable[[float], float] | None = None) -> SelectionScheme:
    return SelectionScheme("roulette", rate_fn=rate_fn)


def ranking() -> SelectionScheme:
    return SelectionScheme("ranking")


def _as_fitness(pop) -> np.ndarray:
    if isinstance(pop, Population):
        f = np.asarray(pop.fitness, dtype=float)
    else:
        f = np.asarray(pop, dtype=float)
    if f.ndim != 1 or f.size == 0:
        raise UsageError("fitness must be a nonempty vector")
    if np.any(np.isnan(f)):
        raise UsageError("fitness vector carries NaN")
    return f


def ranking_rates(fitness: np.ndarray, relation: Relation) -> np.ndarray:
    """Rate = 1 + number of strictly worse individuals.

    Equal fitness gets equal rates, better fitness strictly larger ones.
    """
    f = _as_fitness(fitness)
    if relation is Relation.MINIMIZE:
        worse = f[None, :] > f[:, None]
    else:
        worse = f[None, :] < f[:, None]
    return 1.0 + worse.sum(axis=1).astype(float)


def _roulette_rates(scheme: SelectionScheme, f: np.ndarray, relation: Relation) -> np.ndarray:
    if scheme.rate_fn is not None:
        rates = np.array([float(scheme.rate_fn(v)) for v in f])
    elif scheme.kind == "roulette":
        if relation is not Relation.MAXIMIZE:
            raise UsageError(
                "roulette with rate = fitness requires maximization; "
                "supply a rate_fn for minimization"
            )
        rates = f.astype(float).copy()
    else:  # proportional default
        rates = ranking_rates(f, relation)
    if np.any(rates < 0):
        raise UsageError("selection rates must be nonnegative")
    if rates.sum() <= 0:
        raise UsageError("total selection rate must be positive")
    return rates


def _tournament_probs(f: np.ndarray, relation: Relation, m: int) -> np.ndarray:
    """Closed-form tournament probabilities via fitness-class enumeration.

    A tournament draws m entrants i.i.d. uniformly (with replacement) and
    picks one of them with probability proportional to the within-tuple
    ranking rates.  Enumerating entrant counts per distinct fitness class
    (instead of all lambda^m ordered tuples) keeps this polynomial; the
    brute-force tuple enumeration serves as the independent test oracle.
    """
    lam = f.size
    sign = 1.0 if relation is Relation.MINIMIZE else -1.0
    values, members = np.unique(sign * f, return_inverse=True)  # best class first
    g = values.size
    class_count = np.bincount(members, minlength=g).astype(float)
    probs = np.zeros(lam)
    for combo in itertools.combinations_with_replacement(range(g), m):
        k = np.bincount(np.array(combo), minlength=g).astype(float)
        # multinomial(m; k) * prod (n_j / lam)^k_j
        log_p = math.lgamma(m + 1) - sum(math.lgamma(kj + 1) for kj in k)
        log_p += float(np.sum(k * (np.log(class_count) - math.log(lam))))
        p_tuple = math.exp(log_p)
        worse_after = np.concatenate([np.cumsum(k[::-1])[::-1][1:], [0.0]])
        rates = 1.0 + worse_after  # per entrant of each class
        total = float(np.sum(k * rates))
        class_sel = k * rates / total
        probs += p_tuple * class_sel[members] / class_count[members]
    return probs


def exact_probs(scheme: SelectionScheme, fitness, relation: Relation) -> np.ndarray:
    """Exact selection probability of each individual; sums to one."""
    f = _as_fitness(fitness)
    lam = f.size
    if scheme.kind == "uniform":
        return np.full(lam, 1.0 / lam)
    if scheme.kind in ("roulette", "proportional", "ranking"):
        if scheme.kind == "ranking":
            rates = ranking_rates(f, relation)
        else:
            rates = _roulette_rates(scheme, f, relation)
        return rates / rates.sum()
    return _tournament_probs(f, relation, scheme.m)


def select_one(
    scheme: SelectionScheme, pop, relation: Relation, rng: np.random.Generator
) -> int:
    """Draw one index by simulating the scheme's mechanism."""
    f = _as_fitness(pop)
    lam = f.size
    if lam == 1:
        return 0
    if scheme.kind == "uniform":
        return int(rng.integers(lam))
    if scheme.kind in ("roulette", "proportional", "ranking"):
        probs = exact_probs(scheme, f, relation)
        return int(rng.choice(lam, p=probs))
    entrants = rng.integers(0, lam, size=scheme.m)
    rates = ranking_rates(f[entrants], relation)
    pick = rng.random() * rates.sum()
    return int(entrants[int(np.searchsorted(np.cumsum(rates), pick, side="right"))])


def select_group(
    scheme: SelectionScheme,
    pop,
    mu: int,
    relation: Relation,
    rng: np.random.Generator,
) -> tuple[int, ...]:
    """mu independent draws of select_one (with replacement)."""
    if mu < 1:
        raise UsageError("group size must be >= 1")
    return tuple(select_one(scheme, pop, relation, rng) for _ in range(mu))


def select_many(
    scheme: SelectionScheme,
    pop,
    relation: Relation,
    size: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Vectorized batch of independent mechanism draws (for statistics)."""
    f = _as_fitness(pop)
    lam = f.size
    if size < 1:
        raise UsageError("sample size must be >= 1")
    if scheme.kind == "uniform":
        return rng.integers(0, lam, size=size)
    if scheme.kind in ("roulette", "proportional", "ranking"):
        probs = exact_probs(scheme, f, relation)
        return rng.choice(lam, size=size, p=probs)
    entrants = rng.integers(0, lam, size=(size, scheme.m))
    fv = f[entrants]
    if relation is Relation.MINIMIZE:
        worse = fv[:, None, :] > fv[:, :, None]
    else:
        worse = fv[:, None, :] < fv[:, :, None]
    rates = 1.0 + worse.sum(axis=2)
    cum = np.cumsum(rates, axis=1)
    picks = rng.random(size) * cum[:, -1]
    slot = (picks[:, None] >= cum).sum(axis=1)
    return entrants[np.arange(size), slot]
