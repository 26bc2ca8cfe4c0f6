import random

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from hetsearch.config import SearchConfig
from hetsearch.errors import EvalError, InfeasibleError, SpaceTooLargeError
from hetsearch.evolution import (
    Member,
    _rank,
    brute_force_oracle,
    evolve_step,
    initialize,
    result_from_json,
    run,
)
from hetsearch.harness import corpus_path
from hetsearch.problem import count_violations, parse_problem, problem_from_obj, validate_assignment

from helpers import brute_optimum, random_problem


def make(params, constraints, cost, **config):
    doc = {"parameters": params, "constraints": constraints, "cost": cost}
    if config:
        doc["config"] = config
    return problem_from_obj(doc)


def ints(**bounds):
    return [{"name": n, "type": "int", "bounds": list(b)} for n, b in bounds.items()]


def corpus(name):
    return parse_problem(corpus_path(name).read_text())


def trace_is_monotone(result):
    keys = [(r.best_violations, r.best_cost) for r in result.trace]
    return all(b <= a for a, b in zip(keys, keys[1:]))


# ---------------------------------------------------------------- initialization

def test_initial_members_respect_bounds():
    spec = make(ints(x=(0, 6)), [], "x")
    pop = initialize(spec, SearchConfig(population_size=8, seed=1))
    assert len(pop) == 8
    assert all(0 <= m.assignment["x"] <= 6 for m in pop.members)


def test_cube_initialization_usually_valid():
    spec = corpus("cube")
    valid = 0
    for seed in range(100):
        pop = initialize(spec, SearchConfig(population_size=4, seed=seed, init_attempts=100))
        valid += sum(m.violations == 0 for m in pop.members)
    assert valid >= 0.75 * 400


def test_initialization_is_deterministic():
    spec = corpus("fpga")
    cfg = SearchConfig(population_size=6, seed=42)
    assert initialize(spec, cfg) == initialize(spec, cfg)
    assert initialize(spec, cfg) != initialize(spec, cfg.with_overrides(seed=43))


def test_zero_attempts_keeps_first_draw():
    spec = make(ints(x=(0, 1000)), ["x == 500"], "x")
    pop = initialize(spec, SearchConfig(population_size=4, seed=0, init_attempts=0))
    assert all(m.violations == 1 for m in pop.members)


def test_initial_population_sorted():
    spec = corpus("quadratic")
    keys = [m.key for m in initialize(spec, SearchConfig(population_size=8, seed=3)).members]
    assert keys == sorted(keys)


# ---------------------------------------------------------------- selection and steps

def test_keep_smaller_half():
    members = [Member({"x": c}, c, 0) for c in (5, 2, 9, 1)]
    assert [m.cost for m in _rank(members)[:2]] == [1, 2]


def test_feasible_beats_cheaper_infeasible():
    members = [Member({"x": 0}, -100, 1), Member({"x": 1}, 50, 0)]
    assert _rank(members)[0].cost == 50


def test_ties_keep_incumbent():
    old = Member({"x": 1}, 3, 0)
    new = Member({"x": 2}, 3, 0)
    assert _rank([old, new])[0] is old


def test_step_never_worsens_quadratic():
    spec = make(ints(x=(-5, 5)), [], "x*x")
    cfg = SearchConfig(population_size=8, seed=11)
    pop = initialize(spec, cfg)
    for t in range(1, 15):
        new, _ = evolve_step(pop, spec, cfg, t)
        assert new.best.cost <= pop.best.cost
        assert len(new) == len(pop)
        pop = new
    assert pop.best.cost == 0


def test_cardinality_preserved_after_one_step():
    spec = corpus("fpga")
    cfg = SearchConfig(population_size=16, seed=5)
    pop = initialize(spec, cfg)
    assert all(m.violations == 0 for m in pop.members)
    pop, _ = evolve_step(pop, spec, cfg, 1)
    for m in pop.members:
        a = m.assignment
        assert a["routine.r1"] + a["routine.r2"] + a["routine.r3"] <= 2
        assert m.violations == 0


# ---------------------------------------------------------------- full runs

def test_quadratic_reaches_minimum():
    result = run(corpus("quadratic"), SearchConfig(population_size=8, max_iterations=50, seed=7))
    assert result.best == {"x": 3}
    assert result.best_cost == -9
    assert result.feasible


def test_single_bool():
    spec = make([{"name": "b", "type": "bool"}], [], "b")
    result = run(spec, SearchConfig(population_size=2, max_iterations=5))
    assert result.best == {"b": 0} and result.best_cost == 0


@pytest.mark.parametrize("seed", range(5))
def test_cube_reaches_zero(seed):
    spec = corpus("cube")
    result = run(spec, spec.defaults.with_overrides(seed=seed))
    assert result.best_cost == 0
    assert result.best == {"cube.x": 0, "cube.y": 0, "cube.z": 0}


def test_trace_layout():
    result = run(corpus("quadratic"), SearchConfig(population_size=4, max_iterations=6, seed=2))
    assert [r.iteration for r in result.trace] == list(range(7))
    assert result.iterations_run == 6
    assert result.trace[0].resets == 0


def test_run_is_deterministic():
    spec = corpus("fpga")
    cfg = spec.defaults.with_overrides(max_iterations=10, seed=123)
    assert run(spec, cfg).to_json() == run(spec, cfg).to_json()


def test_result_json_round_trip():
    result = run(corpus("quadratic"), SearchConfig(population_size=4, max_iterations=3))
    again = result_from_json(result.to_json())
    assert again.to_json() == result.to_json()


def test_early_stop():
    spec = corpus("quadratic")
    cfg = SearchConfig(population_size=8, max_iterations=500, seed=1, early_stop=True)
    result = run(spec, cfg)
    assert result.iterations_run < 500
    assert result.best_cost == -9


def test_reset_recovers_from_empty_valid_set():
    # from (0, 0) no single-coordinate move can satisfy x == y + 7, so the
    # valid sets of both coordinates are empty until a reset lands nearby
    spec = make(ints(x=(0, 20), y=(0, 20)), ["x == y + 7"], "x + y")
    result = run(spec, SearchConfig(population_size=8, max_iterations=60, seed=4, init_attempts=0))
    assert sum(r.resets for r in result.trace) >= 1
    assert result.feasible
    assert result.best_cost == 7


@settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.integers(0, 2**32))
def test_random_runs_monotone_and_population_stable(seed):
    rng = random.Random(seed)
    spec = random_problem(rng, max_domain=60)
    cfg = SearchConfig(population_size=6, max_iterations=8, seed=seed % 1000)
    try:
        result = run(spec, cfg)
    except EvalError:  # overflow in a random cost is legitimate
        return
    assert trace_is_monotone(result)
    assert len(result.population) == 6
    assert result.feasible == (count_violations(spec, result.best) == 0)


@settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.integers(0, 2**32))
def test_feasible_members_stay_feasible(seed):
    rng = random.Random(seed)
    spec = random_problem(rng, max_domain=40)
    cfg = SearchConfig(population_size=4, seed=seed % 997)
    pop = initialize(spec, cfg)
    before = sum(m.violations == 0 for m in pop.members)
    pop, _ = evolve_step(pop, spec, cfg, 1)
    after = [m for m in pop.members if m.violations == 0]
    assert len(after) >= before
    for m in after:
        assert validate_assignment(spec.space, spec, m.assignment)


# ---------------------------------------------------------------- oracle

def test_oracle_quadratic():
    best, cost = brute_force_oracle(corpus("quadratic"))
    assert best == {"x": 3} and cost == -9


def test_oracle_tie_breaks_lexicographically():
    spec = make(ints(a=(0, 3), b=(0, 3)), ["a + b >= 2"], "0")
    assert brute_force_oracle(spec) == ({"a": 0, "b": 2}, 0)


def test_oracle_too_large():
    with pytest.raises(SpaceTooLargeError):
        brute_force_oracle(corpus("arch"))


def test_oracle_infeasible():
    spec = make(ints(x=(0, 5)), ["x > 9"], "x")
    with pytest.raises(InfeasibleError):
        brute_force_oracle(spec)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32))
def test_oracle_matches_reference(seed):
    spec = random_problem(random.Random(seed), max_domain=12, max_params=3)
    try:
        reference = brute_optimum(spec)
    except EvalError:
        return
    if reference is None:
        with pytest.raises(InfeasibleError):
            brute_force_oracle(spec)
        return
    best, cost = brute_force_oracle(spec)
    assert cost == reference[0]
    assert validate_assignment(spec.space, spec, best)
    assert best == reference[1]
