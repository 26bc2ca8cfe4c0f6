"""Per-parameter valid sets and distance-weighted neighbor sampling.

For one target parameter, every assertion that mentions it is evaluated
with the other parameters fixed at their current values, over a batch of
candidate values for the target. A candidate survives only if all of those
assertions are truthy, so anything later drawn from the set keeps them
satisfied by construction.

Domains no larger than ``scan_cap`` are scanned exhaustively. Larger ones are
probed on a sparse grid: the current value, the current value plus or minus
every power of two that fits, and ``scan_cap`` evenly spaced lattice points.
The grid result is a subset of the true valid set, never a superset.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .config import SamplingStrategy
from .errors import EvalError, HetsearchError
from .expr import eval_batch
from .problem import ProblemSpec

DEFAULT_SCAN_CAP = 65536
_CACHE_LIMIT = 50_000


class EmptyValidSetError(HetsearchError):
    pass


@dataclass(frozen=True)
class IntRange:
    """Contiguous inclusive integer range, used where materializing would not fit."""

    lo: int
    hi: int

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1

    def __contains__(self, value: int) -> bool:
        return self.lo <= value <= self.hi


@dataclass(frozen=True)
class ValidSet:
    target: str
    values: np.ndarray | IntRange  # ascending int64 array unless an IntRange
    exact: bool

    @property
    def size(self) -> int:
        return int(self.values.size)

    def __contains__(self, value: int) -> bool:
        if isinstance(self.values, IntRange):
            return value in self.values
        i = np.searchsorted(self.values, value)
        return bool(i < self.values.size and self.values[i] == value)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ValidSet):
            return NotImplemented
        if isinstance(self.values, IntRange) or isinstance(other.values, IntRange):
            return (self.target, self.values, self.exact) == (other.target, other.values, other.exact)
        return (
            self.target == other.target
            and self.exact == other.exact
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None


@functools.lru_cache(maxsize=256)
def _lattice(lo: int, hi: int, points: int) -> np.ndarray:
    span = hi - lo
    if points <= 1:
        return np.array([lo], dtype=np.int64)
    return np.array([lo + (i * span) // (points - 1) for i in range(points)], dtype=np.int64)


def capped_grid(lo: int, hi: int, current: int, scan_cap: int) -> np.ndarray:
    """Sorted candidate grid for a domain too large to scan."""
    cur = min(max(current, lo), hi)
    span = hi - lo
    near = [cur]
    for k in range(span.bit_length()):
        step = 1 << k
        if cur - step >= lo:
            near.append(cur - step)
        if cur + step <= hi:
            near.append(cur + step)
    grid = np.concatenate([np.array(near, dtype=np.int64), _lattice(lo, hi, scan_cap)])
    return np.unique(grid)


def _domain_array(lo: int, hi: int) -> np.ndarray:
    return lo + np.arange(hi - lo + 1, dtype=np.int64)


def valid_set(
    target_path: str,
    current: Mapping[str, int],
    spec: ProblemSpec,
    scan_cap: int = DEFAULT_SCAN_CAP,
) -> ValidSet:
    """Values of ``target_path`` that keep every assertion mentioning it truthy,
    with all other parameters held at their values in ``current``."""
    param = spec.space[target_path]
    assertions = spec.assertions_for(target_path)
    exact = param.size <= scan_cap
    if not assertions:
        if exact:
            return ValidSet(target_path, _domain_array(param.lo, param.hi), True)
        return ValidSet(target_path, IntRange(param.lo, param.hi), True)

    context = tuple(
        sorted({(path, int(current[path])) for a in assertions for path in a.paths if path != target_path})
    )
    key = (target_path, scan_cap, context, None if exact else int(current[target_path]))
    cache = spec._valid_cache
    hit = cache.get(key)
    if hit is not None:
        return hit

    if exact:
        candidates = _domain_array(param.lo, param.hi)
    else:
        candidates = capped_grid(param.lo, param.hi, int(current[target_path]), scan_cap)
    env = {path: np.asarray(value, dtype=np.int64) for path, value in context}
    env[target_path] = candidates

    keep = np.ones(candidates.size, dtype=bool)
    for a in assertions:
        try:
            out = eval_batch(a.fn, env, candidates.size)
        except EvalError as exc:
            if not hasattr(exc, "index"):
                raise
            value = int(candidates[exc.index])
            raise EvalError(f"{a.id}: {exc.reason} for {target_path}={value}") from None
        keep &= out != 0
    result = ValidSet(target_path, candidates[keep], exact)
    if len(cache) >= _CACHE_LIMIT:
        cache.clear()
    cache[key] = result
    return result


def reset_set(target_path: str, spec: ProblemSpec, scan_cap: int = DEFAULT_SCAN_CAP) -> ValidSet:
    """The whole declared domain of ``target_path``, ignoring assertions."""
    p = spec.space[target_path]
    if p.size <= scan_cap:
        return ValidSet(target_path, _domain_array(p.lo, p.hi), True)
    return ValidSet(target_path, IntRange(p.lo, p.hi), True)


def rank_weights(size: int, strategy: SamplingStrategy | str) -> np.ndarray:
    """Unnormalized weight of each closeness rank: ``(size - rank) ** power``."""
    power = SamplingStrategy(strategy).power
    return np.arange(size, 0, -1, dtype=np.float64) ** power


def _distance(values: np.ndarray, current: int) -> np.ndarray:
    # exact |v - current| for any pair of int64 values, as uint64
    u = values.view(np.uint64)
    c = np.uint64(current % 2**64)
    with np.errstate(over="ignore"):
        return np.where(values >= current, u - c, c - u)


def closeness_order(values: np.ndarray, current: int) -> np.ndarray:
    """``values`` sorted by distance to ``current``; ties go to the smaller value."""
    values = np.asarray(values, dtype=np.int64)
    return values[np.lexsort((values, _distance(values, current)))]


def _range_value_at_rank(r: IntRange, current: int, rank: int) -> int:
    # closeness order over a contiguous range: cur, cur-1, cur+1, cur-2, ...
    cur = min(max(current, r.lo), r.hi)
    left, right = cur - r.lo, r.hi - cur
    paired = min(left, right)
    if rank == 0:
        return cur
    if rank <= 2 * paired:
        step = (rank + 1) // 2
        return cur - step if rank % 2 else cur + step
    step = paired + rank - 2 * paired
    return cur - step if left > right else cur + step


def sample_neighbors(
    vs: ValidSet,
    current_value: int,
    strategy: SamplingStrategy | str,
    count: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Draw ``count`` values from ``vs`` with replacement, favoring values near
    ``current_value`` according to ``strategy``."""
    if vs.size == 0:
        raise EmptyValidSetError(f"valid set of {vs.target!r} is empty")
    strategy = SamplingStrategy(strategy)
    if isinstance(vs.values, IntRange):
        # continuous inverse CDF of P(size - rank) ~ (size - rank) ** power
        size = vs.size
        u = 1.0 - rng.random(count)
        out = []
        for x in u:
            j = min(max(int(np.ceil(size * x ** (1.0 / (strategy.power + 1)))), 1), size)
            out.append(_range_value_at_rank(vs.values, current_value, size - j))
        return np.array(out, dtype=np.int64)
    ordered = closeness_order(vs.values, current_value)
    cum = np.cumsum(rank_weights(ordered.size, strategy))
    picks = np.searchsorted(cum, rng.random(count) * cum[-1], side="right")
    return ordered[np.minimum(picks, ordered.size - 1)]
