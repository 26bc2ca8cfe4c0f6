"""Run reports, strategy comparisons and the bundled example problems."""

from __future__ import annotations

import hashlib
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any

from . import __version__
from .config import SamplingStrategy, SearchConfig
from .evolution import SearchResult, run
from .problem import ProblemSpec, parse_problem

CORPUS = ("quadratic", "cube", "fpga", "arch")


def corpus_path(name: str) -> Path:
    """Filesystem path of a bundled example problem, e.g. ``corpus_path("fpga")``."""
    return Path(str(resources.files("hetsearch") / "corpus" / f"{name}.json"))


@dataclass
class RunReport:
    result: SearchResult
    config: SearchConfig
    input_sha256: str
    duration_s: float | None = None

    def to_json(self) -> dict[str, Any]:
        out = {
            "tool": "hetsearch",
            "version": __version__,
            "input_sha256": self.input_sha256,
            "config": self.config.to_json(),
            **self.result.to_json(),
        }
        if self.duration_s is not None:
            out["duration_s"] = self.duration_s
        return out


def run_report(source: bytes, overrides: dict[str, Any] | None = None, timing: bool = False) -> RunReport:
    spec = parse_problem(source)
    config = spec.defaults.with_overrides(**(overrides or {}))
    start = time.perf_counter()
    result = run(spec, config)
    elapsed = time.perf_counter() - start
    return RunReport(result, config, hashlib.sha256(source).hexdigest(), elapsed if timing else None)


def trace_csv(result: SearchResult) -> str:
    buf = io.StringIO()
    buf.write("iteration,best_cost,mean_cost,resets\n")
    for r in result.trace:
        buf.write(f"{r.iteration},{r.best_cost},{r.mean_cost!r},{r.resets}\n")
    return buf.getvalue()


@dataclass
class ComparisonReport:
    curves: dict[str, list[float]]  # strategy -> mean best cost per iteration
    repeats: int
    seeds: list[int]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("strategy,iteration,mean_best_cost\n")
        for strategy, curve in self.curves.items():
            for t, value in enumerate(curve):
                buf.write(f"{strategy},{t},{value!r}\n")
        return buf.getvalue()

    def to_json(self) -> dict[str, Any]:
        return {"repeats": self.repeats, "seeds": self.seeds, "curves": self.curves}


def _best_cost_curve(args: tuple[str, dict[str, Any]]) -> list[int]:
    text, fields = args
    spec = parse_problem(text)
    result = run(spec, SearchConfig(**fields))
    return [r.best_cost for r in result.trace]


def compare_strategies(
    source: str | bytes,
    repeats: int,
    config: SearchConfig | None = None,
    strategies=tuple(SamplingStrategy),
    jobs: int = 1,
) -> ComparisonReport:
    """Average best-cost traces over seeds ``seed .. seed + repeats - 1`` for each strategy."""
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    text = source.decode("utf-8") if isinstance(source, bytes) else source
    spec: ProblemSpec = parse_problem(text)
    base = config or spec.defaults
    seeds = [base.seed + r for r in range(repeats)]
    tasks = []
    for strategy in strategies:
        for seed in seeds:
            cfg = base.with_overrides(strategy=SamplingStrategy(strategy), seed=seed)
            tasks.append((text, {**cfg.__dict__, "strategy": cfg.strategy.value}))
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            curves = list(pool.map(_best_cost_curve, tasks))
    else:
        curves = [_best_cost_curve(t) for t in tasks]

    means = {}
    for k, strategy in enumerate(strategies):
        block = curves[k * repeats:(k + 1) * repeats]
        length = max(len(c) for c in block)
        # runs that stopped early hold their last value
        padded = [c + [c[-1]] * (length - len(c)) for c in block]
        means[SamplingStrategy(strategy).value] = [
            sum(col) / repeats for col in zip(*padded)
        ]
    return ComparisonReport(means, repeats, seeds)


def report_json(obj: dict[str, Any]) -> str:
    return json.dumps(obj, indent=2) + "\n"
