"""Discrete search over heterogeneous integer/Boolean/composite parameters."""

__version__ = "0.1.0"

from .config import SamplingStrategy, SearchConfig  # noqa: E402
from .errors import (  # noqa: E402
    EvalError,
    HetsearchError,
    InfeasibleError,
    ParseError,
    SchemaError,
    SpaceTooLargeError,
)
from .evolution import SearchResult, brute_force_oracle, run  # noqa: E402
from .expr import parse_expr  # noqa: E402
from .feasibility import ValidSet, sample_neighbors, valid_set  # noqa: E402
from .problem import ProblemSpec, flatten, parse_problem, validate_assignment  # noqa: E402

__all__ = [
    "EvalError",
    "HetsearchError",
    "InfeasibleError",
    "ParseError",
    "ProblemSpec",
    "SamplingStrategy",
    "SchemaError",
    "SearchConfig",
    "SearchResult",
    "SpaceTooLargeError",
    "ValidSet",
    "brute_force_oracle",
    "flatten",
    "parse_expr",
    "parse_problem",
    "run",
    "sample_neighbors",
    "validate_assignment",
    "valid_set",
]
