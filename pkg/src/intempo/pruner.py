"""Retention rules and physical removal of obsolete history.

Rules are derived from the timestamp constraints of attached queries, per
node type and per attribute profile (a StringValue carrying value="op"
plays a different role than one carrying value="anti", so they rotate out
of the model on different schedules).

Removability is re-derived from constraint satisfiability rather than
guessed: a body element constrained by `dts > x - b` can still satisfy a
future trigger at x >= t iff dts > t - b, so it may be removed once
dts <= t - b; under occurrence constraints (`cts >= x - b`) the same
argument bounds the creation timestamp. Elements that can only ever bind
the canonical new-trigger variable are removable once analyzed (cts < t):
this assumes the workload never attaches new edges to old trigger
elements, which holds for event streams that create each value node
together with its only edge. Elements whose type is mentioned by some
query but whose attributes fit no variable profile can never be bound at
all and are removed once analyzed. Types no query mentions are retained
forever (the safe default).

An element governed by several rules is removed only when every one of
them agrees, so wider windows and retain-forever dominate.
"""

from __future__ import annotations

import time
from collections import Counter
from dataclasses import dataclass
from typing import Iterable

from .errors import RuleTypeUnknownError
from .formula import NODE
from .model import TemporalGraph, Timepoint
from .schema import AttrValue, TypeSchema
from .translate import CtsWithin, DtsAfter, StructuralQuery

TRIGGER_ONLY = "trigger-only"
WINDOW = "window"
RETAIN = "retain-forever"


@dataclass(frozen=True)
class PruningRule:
    """Removability condition for elements matching one variable profile."""

    node_type: str
    attr_filter: tuple[tuple[str, AttrValue], ...]
    form: str
    window: int | None = None  # WINDOW: retention span in seconds
    governing: str | None = None  # WINDOW: "cts" or "dts"
    dead_window: int | None = None  # RETAIN: span after deletion; None = never

    def matches(self, element, schema: TypeSchema) -> bool:
        if not schema.is_subtype(element.type_name, self.node_type):
            return False
        attributes = element.attributes
        return all(attributes.get(k) == v for k, v in self.attr_filter)

    def admits_removal(self, element, now: Timepoint) -> bool:
        if self.form == TRIGGER_ONLY:
            return element.cts < now
        if self.form == WINDOW:
            governing = element.cts if self.governing == "cts" else element.dts
            return governing <= now - self.window
        if self.dead_window is None:
            return False
        return element.dts <= now - self.dead_window

    def describe(self) -> str:
        attrs = ",".join(f"{k}={v!r}" for k, v in self.attr_filter) or "*"
        if self.form == TRIGGER_ONLY:
            cond = "cts < t"
        elif self.form == WINDOW:
            cond = f"{self.governing} <= t - {self.window}"
        elif self.dead_window is not None:
            cond = f"dts <= t - {self.dead_window} (deleted only)"
        else:
            cond = "never"
        return f"{self.node_type}[{attrs}]: removable iff {cond}"


@dataclass
class PruneReport:
    at: Timepoint
    removed_nodes: Counter
    removed_edges: int
    duration_ns: int

    @property
    def removed_total(self) -> int:
        return sum(self.removed_nodes.values()) + self.removed_edges


def derive_rules(
    queries: Iterable[StructuralQuery], schema: TypeSchema
) -> list[PruningRule]:
    """Per-profile retention rules for a set of translated queries.

    With no queries the result is empty and nothing is ever pruned.
    """
    raw: list[PruningRule] = []
    windows: list[int] = []
    unbounded_body = False
    prepared: list[StructuralQuery] = []
    for query in queries:
        if not query.resolved:
            query = query.bind(schema)
        prepared.append(query)
        for stage in query.stages:
            for name, var in stage.pattern.variables.items():
                if var.kind != NODE:
                    continue
                constraints = query.constraints_for(name)
                if not any(isinstance(c, (DtsAfter, CtsWithin)) for c in constraints):
                    unbounded_body = True
                for c in constraints:
                    if isinstance(c, CtsWithin):
                        windows.append(c.hi_offset)
                    elif isinstance(c, DtsAfter):
                        windows.append(c.offset)
    dead_window: int | None
    if unbounded_body or not windows:
        dead_window = None
    else:
        dead_window = max(windows)

    for query in prepared:
        trigger = query.trigger
        for name, var in trigger.pattern.variables.items():
            if var.kind != NODE:
                continue
            if name == trigger.new_var:
                raw.append(PruningRule(var.type_name, var.attrs, TRIGGER_ONLY))
            else:
                raw.append(
                    PruningRule(var.type_name, var.attrs, RETAIN, dead_window=dead_window)
                )
        for stage in query.stages:
            for name, var in stage.pattern.variables.items():
                if var.kind != NODE:
                    continue
                constraints = query.constraints_for(name)
                rule = None
                for c in constraints:
                    if isinstance(c, CtsWithin):
                        rule = PruningRule(
                            var.type_name, var.attrs, WINDOW, c.hi_offset, "cts"
                        )
                    elif isinstance(c, DtsAfter) and rule is None:
                        rule = PruningRule(
                            var.type_name, var.attrs, WINDOW, c.offset, "dts"
                        )
                if rule is None:
                    rule = PruningRule(
                        var.type_name, var.attrs, RETAIN, dead_window=dead_window
                    )
                raw.append(rule)

    return _consolidate(raw)


def _consolidate(rules: list[PruningRule]) -> list[PruningRule]:
    merged: dict[tuple, PruningRule] = {}
    for rule in rules:
        key = (rule.node_type, rule.attr_filter, rule.form, rule.governing)
        existing = merged.get(key)
        if existing is None:
            merged[key] = rule
        elif rule.form == WINDOW and rule.window > existing.window:
            merged[key] = rule  # wider window dominates
        elif rule.form == RETAIN:
            if existing.dead_window is not None and (
                rule.dead_window is None or rule.dead_window > existing.dead_window
            ):
                merged[key] = rule
    return sorted(
        merged.values(), key=lambda r: (r.node_type, r.attr_filter, r.form)
    )


def removable(
    element, rules: list[PruningRule], schema: TypeSchema, now: Timepoint
) -> bool:
    """Combined removability: every matching rule must agree. Elements of a
    mentioned type matching no attribute profile are unbindable and go once
    analyzed; elements of unmentioned types are kept."""
    matched = False
    type_covered = False
    for rule in rules:
        if not schema.is_subtype(element.type_name, rule.node_type):
            continue
        type_covered = True
        if all(element.attributes.get(k) == v for k, v in rule.attr_filter):
            matched = True
            if not rule.admits_removal(element, now):
                return False
    if matched:
        return True
    if type_covered:
        return element.cts < now
    return False


def prune(
    graph: TemporalGraph, rules: list[PruningRule], now: Timepoint
) -> PruneReport:
    """Physically remove every node whose combined rule predicate holds at
    `now`, together with its incident edges. Must run between analysis
    passes, with `now` at or after the last applied event timestamp.
    The report's duration is monotonic wall time."""
    start = time.perf_counter_ns()
    schema = graph.schema
    for rule in rules:
        if not schema.is_node_type(rule.node_type):
            raise RuleTypeUnknownError(f"pruning rule for unknown type {rule.node_type!r}")
    if now < graph.last_event_ts:
        raise ValueError(
            f"prune time {now} precedes last applied event {graph.last_event_ts}"
        )
    # resolve rule applicability per concrete type once, not per element
    rules_by_type: dict[str, list[PruningRule]] = {}
    for rule in rules:
        for concrete in schema.subtypes_of(rule.node_type):
            rules_by_type.setdefault(concrete, []).append(rule)
    candidate_ids: set[int] = set()
    for rule in rules:
        candidate_ids.update(graph.type_bucket(rule.node_type))
    victims: list[int] = []
    elements = graph.elements
    for eid in candidate_ids:
        element = elements[eid]
        type_rules = rules_by_type.get(element.type_name)
        if not type_rules:
            continue
        matched = False
        keep = False
        attributes = element.attributes
        for rule in type_rules:
            for key, value in rule.attr_filter:
                if attributes.get(key) != value:
                    break
            else:
                matched = True
                if not rule.admits_removal(element, now):
                    keep = True
                    break
        if keep:
            continue
        if matched or element.cts < now:
            victims.append(eid)
    removed_nodes: Counter = Counter()
    removed_edges = 0
    for eid in victims:
        element = elements[eid]
        removed_nodes[element.type_name] += 1
        removed_edges += graph.remove_node(eid)
    return PruneReport(
        at=now,
        removed_nodes=removed_nodes,
        removed_edges=removed_edges,
        duration_ns=time.perf_counter_ns() - start,
    )
