"""Population search over the integer lattice.

A population of ``N`` complete assignments is swept one parameter at a time.
For each parameter, every member proposes one neighbor that differs only in
that coordinate, drawn from the member's valid set (or from the full domain
when the valid set is empty). The ``N`` incumbents and ``N`` proposals are
ranked together and the best ``N`` survive. One pass over all parameters is
one iteration.

Ranking is by number of violated assertions first and cost second, so a
feasible member is never displaced by an infeasible one. Ties keep the
incumbent.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .config import EARLY_STOP_PATIENCE, SamplingStrategy, SearchConfig
from .errors import EvalError, InfeasibleError, SpaceTooLargeError
from .expr import eval_batch
from .feasibility import reset_set, sample_neighbors, valid_set
from .problem import Assignment, ProblemSpec, count_violations

log = logging.getLogger(__name__)

ORACLE_LIMIT = 10**7
_ORACLE_CHUNK = 1 << 16


@dataclass(frozen=True)
class Member:
    assignment: Assignment
    cost: int
    violations: int

    @property
    def key(self) -> tuple[int, int]:
        return (self.violations, self.cost)


@dataclass(frozen=True)
class Population:
    members: tuple[Member, ...]

    @property
    def best(self) -> Member:
        return self.members[0]

    def __len__(self) -> int:
        return len(self.members)

    def mean_cost(self) -> float:
        return float(np.mean([m.cost for m in self.members]))


@dataclass(frozen=True)
class StepStats:
    resets: int


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    best_cost: int
    mean_cost: float
    resets: int
    best_violations: int


@dataclass
class SearchResult:
    best: Assignment
    best_cost: int
    feasible: bool
    trace: list[TraceRecord]
    seed: int
    strategy: SamplingStrategy
    iterations_run: int
    population: Population | None = field(default=None, repr=False)

    def to_json(self) -> dict[str, Any]:
        return {
            "best": dict(self.best),
            "best_cost": self.best_cost,
            "feasible": self.feasible,
            "seed": self.seed,
            "strategy": self.strategy.value,
            "iterations_run": self.iterations_run,
            "trace": [
                {
                    "iteration": r.iteration,
                    "best_cost": r.best_cost,
                    "mean_cost": r.mean_cost,
                    "resets": r.resets,
                    "best_violations": r.best_violations,
                }
                for r in self.trace
            ],
        }


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for one (iteration, parameter, member) slot."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def _rank(members: list[Member]) -> list[Member]:
    # sorted() is stable, so earlier (older) members win ties
    return sorted(members, key=lambda m: m.key)


def _score(spec: ProblemSpec, assignments: list[Assignment], context: str) -> list[Member]:
    """Evaluate cost and violation count for a batch of assignments."""
    n = len(assignments)
    env = {
        p.path: np.fromiter((a[p.path] for a in assignments), np.int64, n) for p in spec.space
    }
    try:
        costs = eval_batch(spec.cost.fn, env, n)
    except EvalError as exc:
        index = getattr(exc, "index", None)
        where = f"member {index}" if index is not None else "batch"
        raise EvalError(f"cost evaluation failed ({context}, {where}): {getattr(exc, 'reason', exc)}") from None
    violations = np.zeros(n, dtype=np.int64)
    for a in spec.assertions:
        try:
            violations += eval_batch(a.fn, env, n) == 0
        except EvalError:
            # some member trips an evaluation error; fall back to the scalar path
            violations = np.array([count_violations(spec, x) for x in assignments])
            break
    return [Member(assignments[j], int(costs[j]), int(violations[j])) for j in range(n)]


def initialize(spec: ProblemSpec, config: SearchConfig) -> Population:
    """Draw ``N`` members uniformly from the declared bounds.

    Each member is redrawn up to ``init_attempts`` times until it satisfies
    every assertion. If none of the draws does, the draw with the fewest
    violations is kept and the sweeps repair it.
    """
    drawn = []
    for j in range(config.population_size):
        rng = substream(config.seed, 0, j)
        best: tuple[int, Assignment] | None = None
        for _ in range(config.init_attempts + 1):
            a = {p.path: int(rng.integers(p.lo, p.hi, endpoint=True)) for p in spec.space}
            bad = count_violations(spec, a)
            if best is None or bad < best[0]:
                best = (bad, a)
            if bad == 0:
                break
        drawn.append(best[1])
    return Population(tuple(_rank(_score(spec, drawn, "initialization"))))


def evolve_step(
    pop: Population, spec: ProblemSpec, config: SearchConfig, iteration: int = 1
) -> tuple[Population, StepStats]:
    """One sweep over every parameter in flattened order."""
    members = list(pop.members)
    n = len(members)
    resets = 0
    for i, param in enumerate(spec.space):
        path = param.path
        proposals = []
        for j, m in enumerate(members):
            try:
                vs = valid_set(path, m.assignment, spec, config.scan_cap)
            except EvalError as exc:
                raise EvalError(f"{exc} (parameter {path}, member {j})") from None
            if vs.size == 0:
                vs = reset_set(path, spec, config.scan_cap)
                resets += 1
            rng = substream(config.seed, iteration, i, j)
            value = sample_neighbors(vs, m.assignment[path], config.strategy, 1, rng)[0]
            proposal = dict(m.assignment)
            proposal[path] = int(value)
            proposals.append(proposal)
        scored = _score(spec, proposals, f"parameter {path}")
        members = _rank(members + scored)[:n]
    return Population(tuple(members)), StepStats(resets)


def _record(pop: Population, iteration: int, resets: int) -> TraceRecord:
    return TraceRecord(iteration, pop.best.cost, pop.mean_cost(), resets, pop.best.violations)


def run(spec: ProblemSpec, config: SearchConfig | None = None) -> SearchResult:
    """Initialize and evolve for ``max_iterations`` sweeps.

    The trace holds one record for the initial population (iteration 0) and
    one per sweep. Output is fully determined by ``spec`` and ``config``.
    """
    config = config or spec.defaults
    pop = initialize(spec, config)
    trace = [_record(pop, 0, 0)]
    stale = 0
    iterations = 0
    for t in range(1, config.max_iterations + 1):
        prev = pop.best.key
        pop, stats = evolve_step(pop, spec, config, t)
        iterations = t
        trace.append(_record(pop, t, stats.resets))
        stale = stale + 1 if pop.best.key == prev else 0
        if config.early_stop and stale >= EARLY_STOP_PATIENCE:
            log.info("stopping early at iteration %d", t)
            break
    best = pop.best
    return SearchResult(
        best=dict(best.assignment),
        best_cost=best.cost,
        feasible=best.violations == 0,
        trace=trace,
        seed=config.seed,
        strategy=config.strategy,
        iterations_run=iterations,
        population=pop,
    )


def brute_force_oracle(spec: ProblemSpec, limit: int = ORACLE_LIMIT) -> tuple[Assignment, int]:
    """Exhaustive minimum over the full lattice.

    Ties go to the lexicographically smallest assignment in flattened order.
    """
    space = spec.space
    total = space.lattice_size()
    if total > limit:
        raise SpaceTooLargeError(f"lattice has {total} points, limit is {limit}")
    sizes = [p.size for p in space]
    best: tuple[int, int] | None = None  # (cost, lattice index)
    for start in range(0, total, _ORACLE_CHUNK):
        idx = np.arange(start, min(start + _ORACLE_CHUNK, total), dtype=np.int64)
        env = {}
        rest = idx.copy()
        for p, size in zip(reversed(space.params), reversed(sizes)):
            env[p.path] = p.lo + rest % size
            rest //= size
        n = idx.size
        feasible = np.ones(n, dtype=bool)
        try:
            for a in spec.assertions:
                feasible &= eval_batch(a.fn, env, n) != 0
        except EvalError:
            rows = [{k: int(v[r]) for k, v in env.items()} for r in range(n)]
            feasible = np.array([count_violations(spec, row) == 0 for row in rows])
        if not feasible.any():
            continue
        sub = {k: v[feasible] for k, v in env.items()}
        costs = eval_batch(spec.cost.fn, sub, int(feasible.sum()))
        k = int(np.argmin(costs))
        if best is None or costs[k] < best[0]:
            best = (int(costs[k]), int(idx[feasible][k]))
    if best is None:
        raise InfeasibleError("no assignment satisfies every assertion")
    cost, index = best
    assignment = {}
    for p, size in zip(reversed(space.params), reversed(sizes)):
        assignment[p.path] = p.lo + index % size
        index //= size
    return {p.path: assignment[p.path] for p in space}, cost


def result_from_json(obj: Mapping[str, Any]) -> SearchResult:
    return SearchResult(
        best=dict(obj["best"]),
        best_cost=obj["best_cost"],
        feasible=obj["feasible"],
        trace=[TraceRecord(**r) for r in obj["trace"]],
        seed=obj["seed"],
        strategy=SamplingStrategy(obj["strategy"]),
        iterations_run=obj["iterations_run"],
    )
