"""Ground-truth evaluator: exhaustive re-matching over replayed events.

Independent check for the incremental monitor. Events are replayed one
timestamp at a time; after all events of timestamp x are applied, every
trigger-pattern match that contains an element created at x and has not
been reported before is evaluated against the body stages, exhaustively.

Enumeration here is deliberately naive: candidates are drawn from whole
per-type element lists in a fixed, text-derived variable order (no
adjacency-guided expansion, no candidate statistics), and connections are
checked from an edge table as soon as both endpoints are bound. A match
that contains an element with cts = x can only exist once its last element
has been created, so anchoring enumeration at the elements created at x
yields exactly the matches that are new at x.

The verdict list is order-normalized: sorted by trigger time, trigger
binding, and status.
"""

from __future__ import annotations

from collections import defaultdict
from typing import Iterable

from .formula import EDGE, Pattern
from .matcher import Binding, BindingKey, MatchVerdict, binding_key
from .model import ChangeEvent, TemporalGraph, Timepoint
from .schema import TypeSchema
from .translate import SATISFIED, StructuralQuery


class _OracleTables:
    """Candidate tables maintained directly from applied deltas."""

    def __init__(self, graph: TemporalGraph):
        self.graph = graph
        self.nodes_by_type: dict[str, list[int]] = defaultdict(list)
        self.edges_by_type: dict[str, list[int]] = defaultdict(list)
        self.edges_by_key: dict[tuple[str, int, int], list[int]] = defaultdict(list)

    def register(self, element_id: int) -> None:
        element = self.graph.elements[element_id]
        if element.is_edge:
            self.edges_by_type[element.type_name].append(element_id)
            key = (element.type_name, element.src, element.tgt)
            self.edges_by_key[key].append(element_id)
        else:
            self.nodes_by_type[element.type_name].append(element_id)

    def node_candidates(self, type_name: str) -> Iterable[int]:
        schema = self.graph.schema
        for concrete in sorted(schema.subtypes_of(type_name)):
            yield from self.nodes_by_type.get(concrete, ())

    def connection_holds(self, edge_type: str, src: int, tgt: int, x: Timepoint) -> bool:
        ids = self.edges_by_key.get((edge_type, src, tgt))
        if not ids:
            return False
        elements = self.graph.elements
        for eid in ids:
            if elements[eid].cts <= x:
                return True
        return False


class _OracleMatcher:
    def __init__(self, query: StructuralQuery, graph: TemporalGraph, tables: _OracleTables):
        self.query = query
        self.graph = graph
        self.tables = tables
        self.schema = graph.schema
        self._vars: dict[str, tuple] = {}
        for name, var in query.variables.items():
            is_edge = var.kind == EDGE
            allowed = None if is_edge else graph.schema.subtypes_of(var.type_name)
            concrete = None if is_edge else tuple(sorted(allowed))
            self._vars[name] = (
                is_edge,
                var.type_name,
                allowed,
                var.attrs,
                query.constraints_for(name),
                concrete,
            )
        self._conns_by_var: dict[tuple[int, str | None], tuple] = {}
        self._order_cache: dict[tuple[int, frozenset], list[str]] = {}

    def _relevant_conns(self, pattern: Pattern, just_bound: str | None) -> tuple:
        key = (id(pattern), just_bound)
        cached = self._conns_by_var.get(key)
        if cached is None:
            if just_bound is None:
                cached = tuple(pattern.connections)
            else:
                cached = tuple(
                    c
                    for c in pattern.connections
                    if just_bound in (c.src, c.tgt, c.edge_var)
                )
            self._conns_by_var[key] = cached
        return cached

    def admits(self, var_name: str, element_id: int, x: Timepoint) -> bool:
        is_edge, type_name, allowed, attrs, constraints, _ = self._vars[var_name]
        element = self.graph.elements[element_id]
        if element.cts > x:
            return False
        if is_edge:
            if element.src is None or element.type_name != type_name:
                return False
        else:
            if element.src is not None or element.type_name not in allowed:
                return False
        attributes = element.attributes
        for key, value in attrs:
            if attributes.get(key) != value:
                return False
        for constraint in constraints:
            if not constraint.holds(element, x):
                return False
        return True

    def enumerate(self, pattern: Pattern, env: Binding, x: Timepoint):
        """All extensions of env binding this pattern's declared variables,
        by exhaustive candidate enumeration.

        Variables are visited in a fixed connectivity-first order derived
        from the pattern text alone (variables connected to already-placed
        ones come first, ties by declaration order); candidates come from
        whole per-type tables with no runtime guidance.
        """
        order = self._static_order(pattern, env)
        env = dict(env)
        if not self._connections_ok(pattern, env, x, None):
            return
        yield from self._extend(pattern, order, 0, env, x)

    def _static_order(self, pattern: Pattern, env: Binding) -> list[str]:
        prebound = frozenset(name for name in env if name in pattern.referenced())
        key = (id(pattern), prebound)
        cached = self._order_cache.get(key)
        if cached is not None:
            return cached
        placed = set(prebound)
        remaining = [n for n in pattern.variables if n not in placed]
        order: list[str] = []

        def connected(name: str) -> bool:
            for c in pattern.connections:
                if name == c.edge_var and c.src in placed and c.tgt in placed:
                    return True
                if name == c.src and c.tgt in placed:
                    return True
                if name == c.tgt and c.src in placed:
                    return True
            return False

        while remaining:
            pick = next((n for n in remaining if connected(n)), remaining[0])
            remaining.remove(pick)
            placed.add(pick)
            order.append(pick)
        self._order_cache[key] = order
        return order

    def _extend(self, pattern: Pattern, order: list[str], i: int, env: Binding, x: Timepoint):
        if i == len(order):
            yield dict(env)
            return
        name = order[i]
        is_edge, type_name, allowed, attr_items, constraints, concrete = self._vars[name]
        used = set(env.values())
        connections_ok = self._connections_ok
        elements = self.graph.elements
        if is_edge:
            candidate_lists = (self.tables.edges_by_type.get(type_name, ()),)
        else:
            by_type = self.tables.nodes_by_type
            candidate_lists = tuple(by_type[t] for t in concrete if t in by_type)
        for candidates in candidate_lists:
            for cand in candidates:
                if cand in used:
                    continue
                element = elements[cand]
                if element.cts > x:
                    continue
                if is_edge and (element.src is None or element.type_name != type_name):
                    continue
                if not is_edge and element.src is not None:
                    continue
                ok = True
                attributes = element.attributes
                for key, value in attr_items:
                    if attributes.get(key) != value:
                        ok = False
                        break
                if ok:
                    for constraint in constraints:
                        if not constraint.holds(element, x):
                            ok = False
                            break
                if not ok:
                    continue
                env[name] = cand
                if connections_ok(pattern, env, x, name):
                    yield from self._extend(pattern, order, i + 1, env, x)
                del env[name]

    def _connections_ok(
        self, pattern: Pattern, env: Binding, x: Timepoint, just_bound: str | None
    ) -> bool:
        """Check connections whose participants are all bound; when
        `just_bound` is given, only those it participates in."""
        elements = self.graph.elements
        for conn in self._relevant_conns(pattern, just_bound):
            if conn.src not in env or conn.tgt not in env:
                continue
            if conn.edge_var is not None:
                edge_id = env.get(conn.edge_var)
                if edge_id is None:
                    continue
                edge = elements[edge_id]
                if edge.src != env[conn.src] or edge.tgt != env[conn.tgt]:
                    return False
            else:
                if not self.tables.connection_holds(
                    conn.edge_type, env[conn.src], env[conn.tgt], x
                ):
                    return False
        return True

    def trigger_bindings_with(self, element_id: int, x: Timepoint):
        """Exhaustive trigger matches whose occurrence contains the element."""
        pattern = self.query.trigger.pattern
        element = self.graph.elements[element_id]
        found: dict[BindingKey, Binding] = {}
        if element.is_edge:
            for conn in pattern.connections:
                edge_type = conn.edge_type
                if edge_type != element.type_name:
                    continue
                if (element.src == element.tgt) != (conn.src == conn.tgt):
                    continue
                env: Binding = {}
                if not self.admits(conn.src, element.src, x):
                    continue
                env[conn.src] = element.src
                if not self.admits(conn.tgt, element.tgt, x):
                    continue
                env[conn.tgt] = element.tgt
                if conn.edge_var is not None:
                    if not self.admits(conn.edge_var, element_id, x):
                        continue
                    env[conn.edge_var] = element_id
                if not self._connections_ok(pattern, env, x, None):
                    continue
                for match in self.enumerate(pattern, env, x):
                    found.setdefault(binding_key(match), match)
        else:
            for name, var in pattern.variables.items():
                if var.kind == EDGE or not self.admits(name, element_id, x):
                    continue
                env = {name: element_id}
                for match in self.enumerate(pattern, env, x):
                    found.setdefault(binding_key(match), match)
        return found

    def evaluate_body(self, trigger_binding: Binding, x: Timepoint):
        stages = self.query.stages
        if not stages:
            return SATISFIED, None
        deepest = 0
        witness_env: Binding | None = None

        def solve(i: int, env: Binding) -> bool:
            nonlocal deepest, witness_env
            if i == len(stages):
                witness_env = env
                return True
            if i > deepest:
                deepest = i
            stage = stages[i]
            if stage.positive:
                for match in self.enumerate(stage.pattern, env, x):
                    if solve(i + 1, match):
                        return True
                return False
            for _ in self.enumerate(stage.pattern, env, x):
                return False
            return solve(i + 1, env)

        if solve(0, dict(trigger_binding)):
            stage_vars = [n for s in stages for n in s.pattern.variables]
            witness = {
                name: witness_env[name]
                for name in stage_vars
                if witness_env and name in witness_env
            }
            return SATISFIED, witness
        return stages[deepest].fail_verdict, None


def oracle_eval(
    query: StructuralQuery,
    events: Iterable[ChangeEvent],
    schema: TypeSchema,
) -> list[MatchVerdict]:
    """Replay events and report every verdict the query implies, by
    exhaustive search. Events must be timestamp-ordered."""
    graph = TemporalGraph(schema)
    if not query.resolved:
        query = query.bind(schema)
    tables = _OracleTables(graph)
    matcher = _OracleMatcher(query, graph, tables)
    reported: set[BindingKey] = set()
    verdicts: list[MatchVerdict] = []

    batch_ts: Timepoint | None = None
    batch_created: list[int] = []

    def evaluate_batch() -> None:
        if batch_ts is None:
            return
        x = batch_ts
        new_bindings: dict[BindingKey, Binding] = {}
        for element_id in batch_created:
            for key, binding in matcher.trigger_bindings_with(element_id, x).items():
                if key not in reported and key not in new_bindings:
                    new_bindings[key] = binding
        for key, binding in new_bindings.items():
            status, witness = matcher.evaluate_body(binding, x)
            reported.add(key)
            verdicts.append(MatchVerdict(x, binding, status, witness))

    for event in events:
        if batch_ts is not None and event.timestamp != batch_ts:
            evaluate_batch()
            batch_created = []
        batch_ts = event.timestamp
        delta = graph.apply_event(event)
        for element_id in delta.created:
            tables.register(element_id)
        batch_created.extend(delta.created)
    evaluate_batch()

    verdicts.sort(key=lambda v: v.key())
    return verdicts
