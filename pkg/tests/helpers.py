"""Random problem generation and brute-force references for the tests.

The references below only use the scalar evaluator and plain Python loops,
so they stay independent of the batch evaluation used by the engine.
"""

from __future__ import annotations

import itertools
import json
import random

from hetsearch.expr import evaluate
from hetsearch.problem import ProblemSpec, problem_from_obj


def random_problem_obj(
    rng: random.Random,
    max_params: int = 4,
    max_domain: int = 200,
    max_assertions: int = 5,
    lattice_limit: int | None = None,
) -> dict:
    """Random spec with int/bool leaves (some grouped in a composite),
    affine and cardinality assertions and a small polynomial cost."""
    n = rng.randint(1, max_params)
    leaves = []  # (path, lo, hi, is_bool)
    decls = []
    group = []
    for i in range(n):
        if rng.random() < 0.3:
            decl = {"name": f"b{i}", "type": "bool"}
            lo, hi, is_bool = 0, 1, True
        else:
            lo = rng.randint(-20, 20)
            size = rng.randint(1, max_domain)
            hi = lo + size - 1
            decl = {"name": f"x{i}", "type": "int", "bounds": [lo, hi]}
            is_bool = False
        if rng.random() < 0.3:
            group.append((decl, lo, hi, is_bool))
        else:
            decls.append(decl)
            leaves.append((decl["name"], lo, hi, is_bool))
    if group:
        decls.append({"name": "g", "type": "composite", "children": [d for d, *_ in group]})
        leaves += [(f"g.{d['name']}", lo, hi, b) for d, lo, hi, b in group]

    if lattice_limit is not None:
        # shrink domains until the lattice fits
        while _lattice(leaves) > lattice_limit:
            k = max(range(len(leaves)), key=lambda j: leaves[j][2] - leaves[j][1])
            path, lo, hi, b = leaves[k]
            leaves[k] = (path, lo, lo + (hi - lo) // 2, b)
        _apply_bounds(decls, {p: (lo, hi) for p, lo, hi, b in leaves if not b})

    paths = [p for p, *_ in leaves]
    bools = [p for p, _, _, b in leaves if b]
    constraints = []
    for _ in range(rng.randint(0, max_assertions)):
        if len(bools) >= 2 and rng.random() < 0.3:
            picked = rng.sample(bools, rng.randint(2, len(bools)))
            op = rng.choice(["<=", ">=", "=="])
            constraints.append(f"{' + '.join(picked)} {op} {rng.randint(0, len(picked))}")
        else:
            picked = rng.sample(paths, rng.randint(1, min(3, len(paths))))
            terms = " + ".join(f"{rng.choice([-3, -2, -1, 1, 2, 3])}*{p}" for p in picked)
            op = rng.choice(["<=", ">=", "<", ">", "!="])
            constraints.append(f"{terms} {op} {rng.randint(-50, 150)}")
    cost_terms = [f"{rng.randint(-5, 5)}*{p}" for p in paths]
    if len(paths) >= 2 and rng.random() < 0.5:
        a, b = rng.sample(paths, 2)
        cost_terms.append(f"{a}*{b}")
    if rng.random() < 0.5:
        p = rng.choice(paths)
        cost_terms.append(f"({p} - {rng.randint(-10, 30)})^2")
    return {"parameters": decls, "constraints": constraints, "cost": " + ".join(cost_terms)}


def _lattice(leaves) -> int:
    size = 1
    for _, lo, hi, _ in leaves:
        size *= hi - lo + 1
    return size


def _apply_bounds(decls, bounds, prefix=""):
    for d in decls:
        path = prefix + d["name"]
        if d["type"] == "composite":
            _apply_bounds(d["children"], bounds, path + ".")
        elif d["type"] == "int":
            d["bounds"] = list(bounds[path])


def random_problem(rng: random.Random, **kw) -> ProblemSpec:
    return problem_from_obj(json.loads(json.dumps(random_problem_obj(rng, **kw))))


def random_assignment(spec: ProblemSpec, rng: random.Random) -> dict[str, int]:
    return {p.path: rng.randint(p.lo, p.hi) for p in spec.space}


def truthy(expr, bindings) -> bool:
    return evaluate(expr, bindings) != 0


def brute_valid_values(spec: ProblemSpec, target: str, current: dict[str, int]) -> list[int]:
    p = spec.space[target]
    mentioning = [a for a in spec.assertions if target in a.paths]
    out = []
    for v in range(p.lo, p.hi + 1):
        trial = {**current, target: v}
        if all(truthy(a.expr, trial) for a in mentioning):
            out.append(v)
    return out


def brute_optimum(spec: ProblemSpec):
    """(cost, assignment) minimum over feasible points, or None if infeasible."""
    params = list(spec.space)
    best = None
    for values in itertools.product(*(range(p.lo, p.hi + 1) for p in params)):
        a = {p.path: v for p, v in zip(params, values)}
        if all(truthy(x.expr, a) for x in spec.assertions):
            c = evaluate(spec.cost.expr, a)
            if best is None or c < best[0]:
                best = (c, a)
    return best
