"""Problem documents: parameter declarations, assertions and the cost.

A problem file is a JSON object::

    {
      "parameters": [
        {"name": "x", "type": "int", "bounds": [0, 10]},
        {"name": "on", "type": "bool"},
        {"name": "cube", "type": "composite", "children": [...]}
      ],
      "constraints": ["x <= 7", "..."],
      "cost": "x*x",
      "config": {"population": 16, "iterations": 200}
    }

Booleans live in ``{0, 1}`` and composites only group their leaves, so the
whole search space is a box in the integer lattice. Leaves are addressed by
dotted paths such as ``cube.x``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any, Iterator, Mapping

import numpy as np

from .config import SearchConfig
from .errors import EvalError, ParseError, SchemaError
from .expr import INT64_MAX, INT64_MIN, Expr, VectorFn, compile_vector, evaluate, free_vars, parse_expr

KINDS = ("int", "bool", "composite")
TOP_LEVEL_KEYS = ("parameters", "constraints", "cost", "config")
_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

Assignment = dict[str, int]


@dataclass(frozen=True)
class ParameterDecl:
    name: str
    kind: str
    bounds: tuple[int, int] | None = None
    children: tuple["ParameterDecl", ...] = ()


@dataclass(frozen=True)
class FlatParameter:
    path: str
    lo: int
    hi: int
    kind: str

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1

    def contains(self, value: int) -> bool:
        return self.lo <= value <= self.hi


class FlatSpace:
    """Ordered scalar leaves of a declaration tree."""

    def __init__(self, params: list[FlatParameter]):
        self.params = tuple(params)
        self._index = {p.path: i for i, p in enumerate(self.params)}
        if len(self._index) != len(self.params):
            raise ValueError("duplicate flat parameter path")

    @property
    def paths(self) -> list[str]:
        return [p.path for p in self.params]

    def __len__(self) -> int:
        return len(self.params)

    def __iter__(self) -> Iterator[FlatParameter]:
        return iter(self.params)

    def __contains__(self, path: str) -> bool:
        return path in self._index

    def __getitem__(self, path: str) -> FlatParameter:
        return self.params[self._index[path]]

    def index(self, path: str) -> int:
        return self._index[path]

    def lattice_size(self) -> int:
        size = 1
        for p in self.params:
            size *= p.size
        return size

    def __eq__(self, other: object) -> bool:
        return isinstance(other, FlatSpace) and self.params == other.params

    def __repr__(self) -> str:
        return f"FlatSpace({self.paths})"


@dataclass(frozen=True)
class AssertionDecl:
    """A parsed expression with its source text. The cost uses id ``cost``."""

    id: str
    source: str
    expr: Expr
    paths: frozenset[str]
    fn: VectorFn = field(compare=False, repr=False, default=None)

    @classmethod
    def from_source(cls, id: str, source: str) -> "AssertionDecl":
        e = parse_expr(source)
        return cls(id, source, e, free_vars(e), compile_vector(e))


@dataclass(frozen=True)
class ProblemSpec:
    parameters: tuple[ParameterDecl, ...]
    assertions: tuple[AssertionDecl, ...]
    cost: AssertionDecl
    defaults: SearchConfig = field(default_factory=SearchConfig)
    # raw config object as written, kept for round-tripping
    config_json: Mapping[str, Any] | None = field(default=None, compare=False)
    space: FlatSpace = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.space is None:
            object.__setattr__(self, "space", _flatten_decls(self.parameters))
        by_target: dict[str, list[AssertionDecl]] = {p.path: [] for p in self.space}
        for a in self.assertions:
            for path in a.paths:
                by_target[path].append(a)
        object.__setattr__(self, "_by_target", {k: tuple(v) for k, v in by_target.items()})
        # memo for feasibility.valid_set; problems are immutable so entries never go stale
        object.__setattr__(self, "_valid_cache", {})

    def assertions_for(self, path: str) -> tuple[AssertionDecl, ...]:
        """Assertions whose text mentions ``path``."""
        return self._by_target[path]

    def cost_of(self, a: Mapping[str, int]) -> int:
        return evaluate(self.cost.expr, a)


def _flatten_decls(decls, prefix: str = "") -> FlatSpace:
    out: list[FlatParameter] = []

    def walk(ds, pre):
        for d in ds:
            path = pre + d.name
            if d.kind == "composite":
                walk(d.children, path + ".")
            elif d.kind == "bool":
                out.append(FlatParameter(path, 0, 1, "bool"))
            else:
                out.append(FlatParameter(path, d.bounds[0], d.bounds[1], "int"))

    walk(decls, prefix)
    return FlatSpace(out)


def flatten(spec: ProblemSpec) -> FlatSpace:
    """Leaves in depth-first declaration order."""
    return spec.space


# --------------------------------------------------------------------------
# Parsing and validation

def _is_int(v: Any) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _parse_decl(obj: Any, where: str) -> ParameterDecl:
    if not isinstance(obj, dict):
        raise SchemaError(where, "parameter declaration must be an object")
    unknown = set(obj) - {"name", "type", "bounds", "children"}
    if unknown:
        raise SchemaError(where, f"unknown key(s) {sorted(unknown)}")
    name = obj.get("name")
    if not isinstance(name, str) or not _NAME_RE.match(name):
        raise SchemaError(where, f"invalid parameter name {name!r}")
    kind = obj.get("type")
    if kind not in KINDS:
        raise SchemaError(where, f"parameter {name!r} has invalid type {kind!r}; expected one of {list(KINDS)}")
    has_bounds = "bounds" in obj
    if kind == "bool":
        if has_bounds:
            raise SchemaError(where, f"bounds not permitted on bool {name!r}")
        if "children" in obj:
            raise SchemaError(where, f"children not permitted on bool {name!r}")
        return ParameterDecl(name, kind)
    if kind == "composite":
        if has_bounds:
            raise SchemaError(where, f"bounds not permitted on composite {name!r}")
        children = obj.get("children")
        if not isinstance(children, list) or not children:
            raise SchemaError(where, f"composite {name!r} needs a non-empty children array")
        decls = tuple(_parse_decl(c, f"{where}.children[{i}]") for i, c in enumerate(children))
        _check_unique(decls, f"{where}.children")
        return ParameterDecl(name, kind, children=decls)
    if "children" in obj:
        raise SchemaError(where, f"children not permitted on int {name!r}")
    if not has_bounds:
        raise SchemaError(where, f"missing bounds on int {name!r}")
    bounds = obj["bounds"]
    if not (isinstance(bounds, list) and len(bounds) == 2 and all(_is_int(b) for b in bounds)):
        raise SchemaError(where, f"bounds of {name!r} must be a pair of integers")
    lo, hi = bounds
    if not (INT64_MIN <= lo <= INT64_MAX and INT64_MIN <= hi <= INT64_MAX):
        raise SchemaError(where, f"bounds of {name!r} exceed the 64-bit range")
    if lo > hi:
        raise SchemaError(where, f"bounds of {name!r} are empty: {lo} > {hi}")
    return ParameterDecl(name, kind, bounds=(lo, hi))


def _check_unique(decls, where: str) -> None:
    seen = set()
    for d in decls:
        if d.name in seen:
            raise SchemaError(where, f"duplicate name {d.name!r}")
        seen.add(d.name)


def _parse_expression(source: Any, id: str, space: FlatSpace) -> AssertionDecl:
    if not isinstance(source, str):
        raise SchemaError(id, "expression must be a string")
    try:
        decl = AssertionDecl.from_source(id, source)
    except ParseError as exc:
        raise SchemaError(id, f"{exc} in {source!r}") from None
    for path in sorted(decl.paths):
        if path not in space:
            composite = any(p.startswith(path + ".") for p in space.paths)
            hint = " (a composite; reference one of its leaves)" if composite else ""
            raise SchemaError(id, f"unknown variable {path!r}{hint}")
    return decl


def problem_from_obj(doc: Any) -> ProblemSpec:
    if not isinstance(doc, dict):
        raise SchemaError("", "problem document must be a JSON object")
    unknown = set(doc) - set(TOP_LEVEL_KEYS)
    if unknown:
        raise SchemaError(sorted(unknown)[0], "unknown top-level key")
    params = doc.get("parameters")
    if not isinstance(params, list) or not params:
        raise SchemaError("parameters", "at least one parameter is required")
    decls = tuple(_parse_decl(p, f"parameters[{i}]") for i, p in enumerate(params))
    _check_unique(decls, "parameters")
    space = _flatten_decls(decls)

    constraints = doc.get("constraints", [])
    if not isinstance(constraints, list):
        raise SchemaError("constraints", "must be an array of expression strings")
    assertions = tuple(
        _parse_expression(c, f"constraints[{i}]", space) for i, c in enumerate(constraints)
    )
    if "cost" not in doc:
        raise SchemaError("cost", "a cost expression is required")
    cost = _parse_expression(doc["cost"], "cost", space)

    config_json = doc.get("config")
    defaults = SearchConfig.from_json(config_json) if config_json is not None else SearchConfig()
    return ProblemSpec(decls, assertions, cost, defaults, config_json, space)


def parse_problem(json_text: str | bytes) -> ProblemSpec:
    """Parse and validate a problem document."""
    if isinstance(json_text, bytes):
        json_text = json_text.decode("utf-8")
    try:
        doc = json.loads(json_text)
    except json.JSONDecodeError as exc:
        raise SchemaError("<json>", f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return problem_from_obj(doc)


def _decl_to_obj(d: ParameterDecl) -> dict[str, Any]:
    out: dict[str, Any] = {"name": d.name, "type": d.kind}
    if d.kind == "int":
        out["bounds"] = list(d.bounds)
    elif d.kind == "composite":
        out["children"] = [_decl_to_obj(c) for c in d.children]
    return out


def problem_to_obj(spec: ProblemSpec) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "parameters": [_decl_to_obj(d) for d in spec.parameters],
        "constraints": [a.source for a in spec.assertions],
        "cost": spec.cost.source,
    }
    if spec.config_json is not None:
        doc["config"] = dict(spec.config_json)
    return doc


def serialize(spec: ProblemSpec) -> str:
    return json.dumps(problem_to_obj(spec), indent=2)


# --------------------------------------------------------------------------
# Assignments

def validate_assignment(space: FlatSpace, spec: ProblemSpec, a: Mapping[str, int]) -> bool:
    """True iff ``a`` is complete, in-domain and satisfies every assertion."""
    for p in space:
        if p.path not in a or not p.contains(a[p.path]):
            return False
    return count_violations(spec, a) == 0


def count_violations(spec: ProblemSpec, a: Mapping[str, int]) -> int:
    """Number of assertions that are falsy (or fail to evaluate) under ``a``."""
    bad = 0
    for assertion in spec.assertions:
        try:
            ok = evaluate(assertion.expr, a) != 0
        except EvalError:
            ok = False
        bad += not ok
    return bad


def assignment_arrays(space: FlatSpace, members: list[Mapping[str, int]]) -> dict[str, np.ndarray]:
    """Column view of several assignments, for batch evaluation."""
    return {p.path: np.fromiter((m[p.path] for m in members), np.int64, len(members)) for p in space}
