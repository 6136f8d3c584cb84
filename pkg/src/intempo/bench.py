"""Benchmark driver: wires events, model, monitor, and pruner into analysis
loops and reports per-loop measurements.

Variants:
  * intempo       incremental checking on the full history graph
  * intempo-plus  incremental checking plus pruning at every loop boundary
  * oracle        exhaustive re-evaluation; emits only the verdict CSV

Loop boundaries are the multiples of the loop interval; an event with a
timestamp exactly on a boundary belongs to the earlier loop. At each
boundary the monitor is flushed first, then (intempo-plus only) the model
is pruned, then the loop row is emitted.

Memory is reported as a derived estimate: retained node and edge counts
times fixed per-kind byte costs (the retained-element count is the
portable driver of memory growth; absolute bytes are runtime-specific).

Query and prune times are thread CPU times. While events are applied the
automatic garbage collector is paused and a young-generation collection
runs at each loop boundary, off the timers, so per-loop measurements
reflect matching work rather than allocator housekeeping.
"""

from __future__ import annotations

import csv
import gc
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .errors import InvalidConfigError
from .events_io import read_events
from .formula import parse_formula
from .matcher import (
    MatchVerdict,
    Monitor,
    attach,
    format_binding,
    parse_binding,
    read_verdicts,
    write_verdicts,
)
from .model import TemporalGraph, Timepoint
from .oracle import oracle_eval
from .pruner import PruningRule, derive_rules, prune
from .schema import TypeSchema
from .simulator import SimConfig, generate, shs_schema
from .translate import LIFESPAN, SATISFIED, VIOLATED, translate

VARIANT_INTEMPO = "intempo"
VARIANT_INTEMPO_PLUS = "intempo-plus"
VARIANT_ORACLE = "oracle"
VARIANTS = (VARIANT_INTEMPO, VARIANT_INTEMPO_PLUS, VARIANT_ORACLE)

NODE_BYTES_ESTIMATE = 112
EDGE_BYTES_ESTIMATE = 96

LOOPS_HEADER = [
    "loop_end",
    "events_applied",
    "query_time_ns",
    "prune_time_ns",
    "satisfied",
    "violated",
    "retained_elements",
    "est_memory_bytes",
]


@dataclass
class LoopReport:
    loop_end: Timepoint
    events_applied: int
    query_time_ns: int
    prune_time_ns: int
    satisfied: int
    violated: int
    retained_elements: int
    est_memory_bytes: int
    # not part of the CSV: bookkeeping for analysis
    additions: int = 0
    removed_elements: int = 0

    def row(self) -> list[int]:
        return [
            self.loop_end,
            self.events_applied,
            self.query_time_ns,
            self.prune_time_ns,
            self.satisfied,
            self.violated,
            self.retained_elements,
            self.est_memory_bytes,
        ]


@dataclass
class RunConfig:
    variant: str
    formula_text: str
    sim: SimConfig | None = None
    events_path: str | Path | None = None
    loop_interval: int = 3600
    semantics: str = LIFESPAN
    out_dir: str | Path | None = None
    warmup_loops: int = 0
    schema: TypeSchema | None = None

    def validate(self) -> None:
        if self.variant not in VARIANTS:
            raise InvalidConfigError(f"unknown variant {self.variant!r}")
        if (self.sim is None) == (self.events_path is None):
            raise InvalidConfigError("exactly one event source (sim or events file)")
        if self.loop_interval < 1:
            raise InvalidConfigError("loop interval must be >= 1 second")
        if self.warmup_loops < 0:
            raise InvalidConfigError("warmup loops must be >= 0")


@dataclass
class RunResult:
    config: RunConfig
    loop_reports: list[LoopReport]
    verdicts: list[MatchVerdict]
    rules: list[PruningRule] = field(default_factory=list)
    summary: dict = field(default_factory=dict)


def run(config: RunConfig) -> RunResult:
    config.validate()
    schema = config.schema or shs_schema()
    formula = parse_formula(config.formula_text)
    query = translate(formula, schema=schema, semantics=config.semantics)

    if config.sim is not None:
        sim_result = generate(config.sim)
        events = sim_result.all_events
        horizon = config.sim.horizon
    else:
        events = read_events(config.events_path)
        horizon = events[-1].timestamp if events else 0

    if config.variant == VARIANT_ORACLE:
        verdicts = oracle_eval(query, events, schema)
        result = RunResult(config, [], verdicts)
        result.summary = _summarize(config, [], verdicts)
    else:
        result = _run_incremental(config, schema, query, events, horizon)

    if config.out_dir is not None:
        _write_outputs(result, Path(config.out_dir))
    return result


def _run_incremental(config, schema, query, events, horizon) -> RunResult:
    graph = TemporalGraph(schema)
    monitor: Monitor = attach(query, graph)
    pruning = config.variant == VARIANT_INTEMPO_PLUS
    rules = derive_rules([query], schema) if pruning else []

    reports: list[LoopReport] = []
    verdicts: list[MatchVerdict] = []
    boundary = config.loop_interval
    loop_events = 0
    loop_additions = 0
    query_ns_mark = 0

    def close_loop(at: Timepoint) -> None:
        nonlocal loop_events, loop_additions, query_ns_mark
        monitor.flush()
        loop_verdicts = monitor.drain()
        verdicts.extend(loop_verdicts)
        prune_ns = 0
        removed = 0
        if pruning:
            report = prune(graph, rules, at)
            prune_ns = report.duration_ns
            removed = report.removed_total
        query_ns = monitor.query_ns - query_ns_mark
        query_ns_mark = monitor.query_ns
        gc.collect(0)  # keep collector pauses at the boundary, off the timers
        reports.append(
            LoopReport(
                loop_end=at,
                events_applied=loop_events,
                query_time_ns=query_ns,
                prune_time_ns=prune_ns,
                satisfied=sum(1 for v in loop_verdicts if v.status == SATISFIED),
                violated=sum(1 for v in loop_verdicts if v.status == VIOLATED),
                retained_elements=len(graph),
                est_memory_bytes=(
                    graph.node_count * NODE_BYTES_ESTIMATE
                    + graph.edge_count * EDGE_BYTES_ESTIMATE
                ),
                additions=loop_additions,
                removed_elements=removed,
            )
        )
        loop_events = 0
        loop_additions = 0

    gc_was_enabled = gc.isenabled()
    gc.disable()
    try:
        for event in events:
            while event.timestamp > boundary:
                close_loop(boundary)
                boundary += config.loop_interval
            delta = graph.apply_event(event)
            loop_events += 1
            loop_additions += len(delta.created)
        last_boundary = max(horizon, graph.last_event_ts)
        while boundary <= last_boundary or loop_events:
            close_loop(boundary)
            boundary += config.loop_interval
    finally:
        if gc_was_enabled:
            gc.enable()

    result = RunResult(config, reports, verdicts, rules)
    result.summary = _summarize(config, reports, verdicts)
    return result


def _summarize(config, reports, verdicts) -> dict:
    total_query = sum(r.query_time_ns for r in reports)
    total_prune = sum(r.prune_time_ns for r in reports)
    over_budget = sum(
        1 for r in reports if r.query_time_ns and r.prune_time_ns > 0.2 * r.query_time_ns
    )
    post = reports[config.warmup_loops :]
    return {
        "variant": config.variant,
        "semantics": config.semantics,
        "loops": len(reports),
        "events_applied": sum(r.events_applied for r in reports),
        "satisfied": sum(1 for v in verdicts if v.status == SATISFIED),
        "violated": sum(1 for v in verdicts if v.status == VIOLATED),
        "total_query_ns": total_query,
        "total_prune_ns": total_prune,
        "removed_elements": sum(r.removed_elements for r in reports),
        "retained_final": reports[-1].retained_elements if reports else 0,
        "loops_prune_over_20pct_of_query": over_budget,
        "mean_query_ns_after_warmup": (
            sum(r.query_time_ns for r in post) // len(post) if post else 0
        ),
    }


def _write_outputs(result: RunResult, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    write_verdicts(out_dir / "verdicts.csv", result.verdicts)
    if result.config.variant != VARIANT_ORACLE:
        write_loops(out_dir / "loops.csv", result.loop_reports)


def write_loops(path, reports: list[LoopReport]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(LOOPS_HEADER)
        for report in reports:
            writer.writerow(report.row())


def read_loops(path) -> list[LoopReport]:
    out: list[LoopReport] = []
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != LOOPS_HEADER:
            raise ValueError(f"{path}: not a loops CSV (header {header!r})")
        for row in reader:
            values = [int(v) for v in row]
            out.append(LoopReport(*values))
    return out


# -- verdict comparison --------------------------------------------------------


@dataclass
class Comparison:
    equal: bool
    divergence: str | None = None


def compare_verdicts(path_a, path_b) -> Comparison:
    """Order-normalized multiset comparison on (trigger_time,
    trigger_binding, status); witnesses are search-order dependent and are
    not compared."""
    a = _verdict_counter(path_a)
    b = _verdict_counter(path_b)
    if a == b:
        return Comparison(True)
    for key in sorted(set(a) | set(b)):
        if a[key] != b[key]:
            time_, binding, status = key
            return Comparison(
                False,
                (
                    f"t={time_} binding=[{binding}] status={status}: "
                    f"{a[key]} occurrence(s) in {path_a}, {b[key]} in {path_b}"
                ),
            )
    return Comparison(False, "counters differ")


def _verdict_counter(path) -> Counter:
    counter: Counter = Counter()
    for v in read_verdicts(path):
        normalized = format_binding(v.trigger_binding)
        counter[(v.trigger_time, normalized, v.status)] += 1
    return counter


def verdict_keys(verdicts: list[MatchVerdict]) -> Counter:
    """In-memory analogue of the CSV comparison key multiset."""
    counter: Counter = Counter()
    for v in verdicts:
        counter[(v.trigger_time, format_binding(v.trigger_binding), v.status)] += 1
    return counter


# -- small analysis helpers (used by the summary and the acceptance suite) -----


def linear_fit(xs: list[float], ys: list[float]) -> tuple[float, float]:
    """Least-squares slope and R^2 of ys against xs."""
    n = len(xs)
    if n < 2:
        return 0.0, 0.0
    mean_x = sum(xs) / n
    mean_y = sum(ys) / n
    sxx = sum((x - mean_x) ** 2 for x in xs)
    sxy = sum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys))
    syy = sum((y - mean_y) ** 2 for y in ys)
    if sxx == 0 or syy == 0:
        return 0.0, 0.0
    slope = sxy / sxx
    r2 = (sxy * sxy) / (sxx * syy)
    return slope, r2


def quartile_mean(values: list[float], which: str) -> float:
    """Mean of the first or last quartile of a sequence (len // 4, >= 1)."""
    if not values:
        return 0.0
    k = max(1, len(values) // 4)
    chunk = values[:k] if which == "first" else values[-k:]
    return sum(chunk) / len(chunk)


__all__ = [
    "Comparison",
    "LoopReport",
    "RunConfig",
    "RunResult",
    "compare_verdicts",
    "linear_fit",
    "quartile_mean",
    "read_loops",
    "run",
    "verdict_keys",
    "write_loops",
    "parse_binding",
]
