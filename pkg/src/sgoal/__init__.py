"""Stochastic global optimization as composable Markov kernels.

Selection schemes, simulated annealing, and (mu/rho +, lambda) evolution
strategies built from a small kernel algebra, plus an exact finite-space
verifier for the absorbing/reachability premises and the
1 - (1 - delta)^t convergence bound.
"""

from .core import (
    Algorithm,
    ContinuousBox,
    ConvergenceTrace,
    EpsClass,
    FiniteSet,
    Population,
    Problem,
    Relation,
    SGoalResult,
    any_of,
    best,
    classify_eps,
    closeness,
    max_evals,
    max_iters,
    run_algorithm,
    run_sgoal,
    target_closeness,
)
from .errors import ConfigError, SgoalError, UsageError
from .kernels import (
    FiniteSpace,
    Kernel,
    ScheduleState,
    compose,
    identity,
    iterate_nonstationary,
    iterated_products,
    join,
    load_matrix,
    projection,
    save_matrix,
    sort_kernel,
)

__version__ = "0.1.0"

__all__ = [
    "Algorithm",
    "ConfigError",
    "ContinuousBox",
    "ConvergenceTrace",
    "EpsClass",
    "FiniteSet",
    "FiniteSpace",
    "Kernel",
    "Population",
    "Problem",
    "Relation",
    "SGoalResult",
    "ScheduleState",
    "SgoalError",
    "UsageError",
    "any_of",
    "best",
    "classify_eps",
    "closeness",
    "compose",
    "identity",
    "iterate_nonstationary",
    "iterated_products",
    "join",
    "load_matrix",
    "max_evals",
    "max_iters",
    "projection",
    "run_algorithm",
    "run_sgoal",
    "save_matrix",
    "sort_kernel",
    "target_closeness",
]
