"""Experiment runner and verification driver.

Subcommands: ``run`` (replicated optimizer runs with CSV traces and a
JSON summary), ``verify`` (exact finite-space premise and bound report),
``select-test`` (exact selection probabilities against sampled
frequencies).  Configuration is a flat key=value file plus KEY=VALUE
command-line overrides; unknown keys are rejected before anything runs.

Exit codes: 0 success/verified, 1 runtime or verification failure,
2 usage/configuration error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import es as es_mod
from . import sa as sa_mod
from .bench import BENCHMARKS, make_benchmark
from .core import Algorithm, Relation, max_iters, run_algorithm
from .errors import ConfigError, SgoalError, UsageError
from .selection import exact_probs, ranking, roulette, select_many, tournament, uniform
from .selection import proportional as proportional_scheme
from .stats import chisquare_gof
from .verify import check_bound, extract_chain, write_bound_csv, write_bound_json

_COMMON_KEYS = {
    "algorithm": str,
    "problem": str,
    "dim": int,
    "replicates": int,
    "seed": int,
    "budget": int,
    "eps": str,
    "out": str,
    "verify.t_max": int,
}
_SA_KEYS = {
    "sa.T0": float,
    "sa.cooling": str,
    "sa.gamma": float,
    "sa.step": float,
    "sa.floor": float,
    "sa.c": float,
    "sa.sigma": float,
    "sa.elitist": bool,
}
_ES_KEYS = {
    "es.mu": int,
    "es.rho": int,
    "es.lambda": int,
    "es.mode": str,
    "es.tau": float,
    "es.sigma_min": float,
    "es.sigma_max": float,
    "es.sigma_init": float,
    "es.recomb_y": str,
    "es.recomb_s": str,
}
_ALL_KEYS = {**_COMMON_KEYS, **_SA_KEYS, **_ES_KEYS}

_DEFAULTS = {
    "replicates": 1,
    "seed": 0,
    "budget": 100,
    "eps": "0.1",
    "out": "out",
    "verify.t_max": 50,
    "sa.T0": 1.0,
    "sa.cooling": "geometric",
    "sa.gamma": 0.95,
    "sa.step": 0.01,
    "sa.floor": 0.0,
    "sa.c": 1.0,
    "sa.sigma": 0.1,
    "sa.elitist": True,
    "es.mu": 5,
    "es.rho": 1,
    "es.lambda": 10,
    "es.mode": "plus",
    "es.sigma_min": 1e-8,
    "es.sigma_max": 1e3,
    "es.sigma_init": 1.0,
    "es.recomb_y": "discrete",
    "es.recomb_s": "intermediate",
}


def _parse_bool(text: str) -> bool:
    key = text.strip().lower()
    if key in ("1", "true", "yes", "on"):
        return True
    if key in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _coerce(key: str, raw: str):
    kind = _ALL_KEYS[key]
    try:
        if kind is bool:
            return _parse_bool(raw)
        return kind(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc


def parse_config_text(text: str) -> dict:
    """Flat key=value lines; '#' starts a comment; unknown keys rejected."""
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key=value, got {stripped!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in _ALL_KEYS:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        values[key] = _coerce(key, raw)
    return values


def load_config(path: str | None, overrides: list[str]) -> dict:
    values = dict(_DEFAULTS)
    if path is not None:
        values.update(parse_config_text(Path(path).read_text(encoding="utf-8")))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not KEY=VALUE")
        key, raw = (part.strip() for part in item.split("=", 1))
        if key not in _ALL_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        values[key] = _coerce(key, raw)
    return values


def _eps_list(values: dict) -> list[float]:
    out = []
    for token in str(values["eps"]).split(","):
        token = token.strip()
        if not token:
            continue
        eps = float(token)
        if eps <= 0:
            raise ConfigError("eps thresholds must be positive")
        out.append(eps)
    if not out:
        raise ConfigError("at least one eps threshold is required")
    return out


def _cooling(values: dict) -> sa_mod.Cooling:
    kind = values["sa.cooling"].strip().lower()
    if kind == "geometric":
        return sa_mod.geometric(values["sa.T0"], values["sa.gamma"])
    if kind == "linear":
        return sa_mod.linear(values["sa.T0"], values["sa.step"], values["sa.floor"])
    if kind in ("log", "logarithmic"):
        return sa_mod.logarithmic(values["sa.c"])
    raise ConfigError(f"unknown cooling {values['sa.cooling']!r}")


def build_algorithm(values: dict, problem=None) -> Algorithm:
    """Assemble the configured algorithm on a fresh benchmark problem."""
    for key in ("algorithm", "problem", "dim"):
        if key not in values:
            raise ConfigError(f"missing required config key {key!r}")
    if values["problem"] not in BENCHMARKS:
        raise ConfigError(
            f"unknown problem {values['problem']!r}; choose from {', '.join(BENCHMARKS)}"
        )
    if values["replicates"] < 1:
        raise ConfigError("replicates must be >= 1")
    if values["budget"] < 1:
        raise ConfigError("budget must be >= 1")
    _eps_list(values)
    if problem is None:
        problem = make_benchmark(values["problem"], values["dim"]).problem
    algorithm = values["algorithm"].strip().lower()
    if algorithm == "sa":
        config = sa_mod.SAConfig(
            schedule=_cooling(values),
            sigma=values["sa.sigma"],
            elitist=values["sa.elitist"],
        )
        return sa_mod.make_sa(problem, config)
    if algorithm == "es":
        config = es_mod.ESConfig(
            mu=values["es.mu"],
            rho=values["es.rho"],
            lam=values["es.lambda"],
            mode=values["es.mode"],
            tau=values.get("es.tau"),
            sigma_init=values["es.sigma_init"],
            sigma_min=values["es.sigma_min"],
            sigma_max=values["es.sigma_max"],
            recomb_y=values["es.recomb_y"],
            recomb_s=values["es.recomb_s"],
        )
        return es_mod.make_es(problem, config)
    raise ConfigError(f"unknown algorithm {values['algorithm']!r} (expected sa or es)")


def _thread_count(replicates: int) -> int:
    raw = os.environ.get("SGOAL_THREADS", "1")
    try:
        cap = max(1, int(raw))
    except ValueError as exc:
        raise ConfigError(f"SGOAL_THREADS must be an integer, got {raw!r}") from exc
    return min(cap, replicates)


def _format(value: float) -> str:
    return f"{value:.17g}"


def _write_trace_csv(path: Path, trace) -> None:
    lines = ["t,D,f_best,evals,T_or_sigma"]
    for i in range(len(trace)):
        lines.append(
            ",".join(
                [
                    str(int(trace.t[i])),
                    _format(trace.d[i]),
                    _format(trace.f_best[i]),
                    str(int(trace.evals[i])),
                    _format(trace.param[i]),
                ]
            )
        )
    path.write_text("\n".join(lines) + "\n", encoding="ascii")


def cmd_run(values: dict) -> int:
    out_dir = Path(values["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    for key in ("algorithm", "problem", "dim"):
        if key not in values:
            raise ConfigError(f"missing required config key {key!r}")
    base = make_benchmark(values["problem"], values["dim"])
    build_algorithm(values, problem=base.problem.copy())  # full validation up front
    eps_list = _eps_list(values)
    replicates = values["replicates"]
    base_seed = values["seed"]
    budget = values["budget"]

    def one(i: int):
        seed = base_seed + i
        algo = build_algorithm(values, problem=base.problem.copy())
        result = run_algorithm(algo, max_iters(budget), seed=seed)
        _write_trace_csv(out_dir / f"trace_{seed}.csv", result.trace)
        return result.trace

    workers = _thread_count(replicates)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            traces = list(pool.map(one, range(replicates)))
    else:
        traces = [one(i) for i in range(replicates)]

    stacked = np.stack([t.d for t in traces])
    summary = {
        "algorithm": values["algorithm"],
        "problem": values["problem"],
        "dim": values["dim"],
        "replicates": replicates,
        "seed": base_seed,
        "budget": budget,
        "t": [int(v) for v in traces[0].t],
        "mean_d": [float(v) for v in stacked.mean(axis=0)],
        "median_d": [float(v) for v in np.median(stacked, axis=0)],
        "pr_d_above": {
            _format(eps): [float(v) for v in (stacked > eps).mean(axis=0)]
            for eps in eps_list
        },
    }
    with open(out_dir / "summary.json", "w", encoding="ascii") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {replicates} trace file(s) and summary.json to {out_dir}")
    return 0


def cmd_verify(values: dict) -> int:
    out_dir = Path(values["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    algo = build_algorithm(values)
    eps = _eps_list(values)[0]
    t_max = values["verify.t_max"]
    chain = extract_chain(algo, eps, t_max=t_max)
    report = check_bound(chain, t_max)
    write_bound_json(report, out_dir / "bound.json")
    write_bound_csv(report, out_dir / "bound.csv")
    worst = min((row.margin for row in report.per_t), default=math.nan)
    print(
        f"delta={report.delta:.6g} absorbing={report.premise_absorbing} "
        f"reach={report.premise_reach} worst_margin={worst:.3e} "
        f"verified={report.verified()}"
    )
    return 0 if report.verified() else 1


_SCHEMES = {
    "uniform": uniform,
    "proportional": proportional_scheme,
    "roulette": roulette,
    "ranking": ranking,
}


def cmd_select_test(args) -> int:
    fitness = np.array([float(v) for v in args.fitness.split(",") if v.strip() != ""])
    if fitness.size == 0:
        raise UsageError("empty fitness vector")
    relation = Relation.parse(args.relation)
    if args.scheme == "tournament":
        scheme = tournament(args.m)
    elif args.scheme in _SCHEMES:
        scheme = _SCHEMES[args.scheme]()
    else:
        raise UsageError(f"unknown scheme {args.scheme!r}")
    probs = exact_probs(scheme, fitness, relation)
    rng = np.random.default_rng(args.seed)
    draws = select_many(scheme, fitness, relation, args.samples, rng)
    counts = np.bincount(draws, minlength=fitness.size)
    result = chisquare_gof(counts, probs, alpha=0.001)
    print(f"scheme={args.scheme} relation={relation.value} samples={args.samples}")
    print(f"{'idx':>4} {'fitness':>12} {'exact':>12} {'empirical':>12}")
    for i, (f, p) in enumerate(zip(fitness, probs)):
        print(f"{i:>4} {f:>12.6g} {p:>12.6g} {counts[i] / args.samples:>12.6g}")
    verdict = "pass" if result.passed else "FAIL"
    print(
        f"chi-square={result.statistic:.4f} dof={result.dof} "
        f"p-value={result.pvalue:.4g} alpha={result.alpha} -> {verdict}"
    )
    return 0 if result.passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sgoal",
        description="Run and verify composable stochastic optimizers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_flags(p):
        p.add_argument("--config", metavar="PATH", help="flat key=value config file")
        p.add_argument("--seed", type=int, help="base RNG seed")
        p.add_argument("--replicates", type=int, help="number of independent runs")
        p.add_argument("--out", metavar="DIR", help="output directory")
        p.add_argument(
            "overrides", nargs="*", metavar="KEY=VALUE", help="config overrides"
        )

    add_config_flags(sub.add_parser("run", help="run replicates, write traces + summary"))
    add_config_flags(sub.add_parser("verify", help="exact premise/bound report"))

    st = sub.add_parser("select-test", help="exact vs sampled selection probabilities")
    st.add_argument("--scheme", required=True,
                    choices=["uniform", "proportional", "tournament", "roulette", "ranking"])
    st.add_argument("--fitness", required=True, help="comma-separated fitness values")
    st.add_argument("--relation", default="min", help="min or max (default min)")
    st.add_argument("--samples", type=int, default=100_000)
    st.add_argument("--m", type=int, default=2, help="tournament size")
    st.add_argument("--seed", type=int, default=0)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "select-test":
            return cmd_select_test(args)
        values = load_config(args.config, args.overrides)
        if args.seed is not None:
            values["seed"] = args.seed
        if args.replicates is not None:
            values["replicates"] = args.replicates
        if args.out is not None:
            values["out"] = args.out
        if args.command == "run":
            return cmd_run(values)
        return cmd_verify(values)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SgoalError as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
