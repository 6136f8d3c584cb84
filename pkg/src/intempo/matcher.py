"""Incremental evaluation of structural queries against a temporal graph.

A monitor subscribes to the creations named by the query's trigger
specification. Each relevant creation anchors a local pattern search for
trigger matches that contain the new element; newly found trigger bindings
are buffered and finalized once the model clock moves past their
timestamp, so a verdict reflects the graph state at the end of its trigger
timestamp. Finalization searches the body stages outward from the bound
elements, evaluates the timestamp constraints with x set to the trigger
time, and emits one verdict per trigger binding. A binding is never
reported twice.

Pattern matching runs over the full history: logically deleted elements
remain candidates, and only the constraint set kappa inspects timestamps.
Elements created after the evaluation timepoint are invisible. Matches
bind named variables injectively; anonymous connections are witnessed by
any edge of the right type between the bound endpoints.
"""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass

from .errors import SchemaMismatchError
from .formula import EDGE, Pattern
from .model import ModelElement, TemporalGraph, Timepoint
from .translate import (
    SATISFIED,
    VIOLATED,
    CtsBefore,
    CtsWithin,
    Stage,
    StructuralQuery,
)

logger = logging.getLogger(__name__)

Binding = dict[str, int]
BindingKey = tuple[tuple[str, int], ...]


def binding_key(binding: Binding) -> BindingKey:
    return tuple(sorted(binding.items()))


def format_binding(binding: Binding | None) -> str:
    if not binding:
        return ""
    return ";".join(f"{var}={binding[var]}" for var in sorted(binding))


def parse_binding(text: str) -> Binding:
    binding: Binding = {}
    if text:
        for part in text.split(";"):
            var, _, value = part.partition("=")
            binding[var] = int(value)
    return binding


@dataclass
class MatchVerdict:
    """Outcome of one trigger binding.

    SATISFIED carries the body witness binding, except for conditions that
    hold vacuously (a missed implication guard). VIOLATED carries none.
    """

    trigger_time: Timepoint
    trigger_binding: Binding
    status: str
    witness: Binding | None = None

    def key(self) -> tuple[Timepoint, BindingKey, str]:
        return (self.trigger_time, binding_key(self.trigger_binding), self.status)


# -- compiled patterns --------------------------------------------------------


class _CompiledVar:
    __slots__ = (
        "name",
        "is_edge",
        "allowed",
        "edge_type",
        "attr_items",
        "dts_checks",
        "cts_floor_off",
        "cts_ceil_off",
    )

    def __init__(self, name, is_edge, allowed, edge_type, attr_items, constraints):
        self.name = name
        self.is_edge = is_edge
        self.allowed = allowed  # frozenset of concrete node types
        self.edge_type = edge_type
        self.attr_items = attr_items
        # cts bounds relative to x: cts <= x - ceil_off, cts >= x - floor_off.
        # ceil_off defaults to 0: elements created after x are invisible.
        ceil_off = 0
        floor_off = None
        dts_checks = []
        for c in constraints:
            if isinstance(c, CtsBefore):
                ceil_off = max(ceil_off, c.offset + 1)
            elif isinstance(c, CtsWithin):
                ceil_off = max(ceil_off, c.lo_offset)
                floor_off = c.hi_offset
            else:
                dts_checks.append(c)
        self.cts_ceil_off = ceil_off
        self.cts_floor_off = floor_off
        self.dts_checks = tuple(dts_checks)

    def admits(self, element: ModelElement, x: int) -> bool:
        if element.cts > x - self.cts_ceil_off:
            return False
        if self.cts_floor_off is not None and element.cts < x - self.cts_floor_off:
            return False
        if self.is_edge:
            if element.src is None or element.type_name != self.edge_type:
                return False
        else:
            if element.src is not None or element.type_name not in self.allowed:
                return False
        attributes = element.attributes
        for key, value in self.attr_items:
            if attributes.get(key) != value:
                return False
        for check in self.dts_checks:
            if not check.holds(element, x):
                return False
        return True


class _CompiledConn:
    __slots__ = ("index", "src", "tgt", "edge_type", "edge_var")

    def __init__(self, index, src, tgt, edge_type, edge_var):
        self.index = index
        self.src = src
        self.tgt = tgt
        self.edge_type = edge_type
        self.edge_var = edge_var


class _CompiledPattern:
    __slots__ = ("vars", "node_vars", "conns", "var_conns", "label")

    def __init__(self, query: StructuralQuery, pattern: Pattern, graph: TemporalGraph, label: str):
        self.label = label
        self.vars: dict[str, _CompiledVar] = {}
        for name, var in pattern.variables.items():
            if var.kind == EDGE:
                allowed, edge_type = frozenset(), var.type_name
            else:
                allowed = graph.schema.subtypes_of(var.type_name)
                edge_type = None
            self.vars[name] = _CompiledVar(
                name,
                var.kind == EDGE,
                allowed,
                edge_type,
                var.attrs,
                query.constraints_for(name),
            )
        self.node_vars = tuple(n for n, v in self.vars.items() if not v.is_edge)
        self.conns = tuple(
            _CompiledConn(i, c.src, c.tgt, c.edge_type, c.edge_var)
            for i, c in enumerate(pattern.connections)
        )
        for conn in self.conns:
            if conn.edge_type is None:
                raise SchemaMismatchError(
                    f"unresolved connection {conn.src} ~> {conn.tgt}; "
                    "bind the query to a schema first"
                )
        self.var_conns: dict[str, list[_CompiledConn]] = {}
        for conn in self.conns:
            self.var_conns.setdefault(conn.src, []).append(conn)
            self.var_conns.setdefault(conn.tgt, []).append(conn)


class _Searcher:
    """Backtracking local search for one compiled pattern.

    Expands along pattern connections from already-bound variables,
    choosing the expansion channel with the fewest candidate edges first.
    Variables unreachable from any bound element fall back to a per-type
    index scan (logged once per pattern: that scan is not local).
    """

    __slots__ = ("cp", "graph", "x", "env", "used", "_warned")

    def __init__(self, cp: _CompiledPattern, graph: TemporalGraph, warned: set[str]):
        self.cp = cp
        self.graph = graph
        self.x = 0
        self.env: Binding = {}
        self.used: set[int] = set()
        self._warned = warned

    def search(self, env: Binding, x: int, verified: int = 0):
        self.x = x
        self.env = dict(env)
        self.used = set(self.env.values())
        yield from self._solve(verified)

    def _solve(self, verified: int):
        env = self.env
        cp = self.cp
        # Settle connections whose endpoints are both bound before growing.
        for conn in cp.conns:
            bit = 1 << conn.index
            if verified & bit or conn.src not in env or conn.tgt not in env:
                continue
            if conn.edge_var is None:
                if self._witnessed(conn):
                    yield from self._solve(verified | bit)
                return
            if conn.edge_var in env:
                edge = self.graph.elements[env[conn.edge_var]]
                if edge.src == env[conn.src] and edge.tgt == env[conn.tgt]:
                    yield from self._solve(verified | bit)
                return
            yield from self._bind_edge_var(conn, verified | bit)
            return

        best = None
        best_len = None
        for name in cp.node_vars:
            if name in env:
                continue
            for conn in cp.var_conns.get(name, ()):
                if verified & (1 << conn.index):
                    continue
                outgoing = conn.src in env and conn.tgt == name
                incoming = conn.tgt in env and conn.src == name
                if not (outgoing or incoming):
                    continue
                anchor = env[conn.src] if outgoing else env[conn.tgt]
                adj = self.graph.adjacency(anchor, conn.edge_type, outgoing)
                n = len(adj) if adj is not None else 0
                if n == 0:
                    return  # a required connection has no witness at all
                if best_len is None or n < best_len:
                    best, best_len = (name, conn, adj), n
        if best is not None:
            yield from self._expand(*best, verified)
            return

        for name in cp.node_vars:
            if name not in env:
                yield from self._scan_fallback(name, verified)
                return
        yield dict(env)

    def _witnessed(self, conn: _CompiledConn) -> bool:
        env = self.env
        adj = self.graph.adjacency(env[conn.src], conn.edge_type, True)
        if adj is None:
            return False
        tgt = env[conn.tgt]
        x = self.x
        other_ids = adj.other_ids
        edge_cts = adj.edge_cts
        for i in range(len(other_ids)):
            if other_ids[i] == tgt and edge_cts[i] <= x:
                return True
        return False

    def _bind_edge_var(self, conn: _CompiledConn, verified: int):
        env = self.env
        used = self.used
        var = self.cp.vars[conn.edge_var]
        adj = self.graph.adjacency(env[conn.src], conn.edge_type, True)
        if adj is None:
            return
        tgt = env[conn.tgt]
        elements = self.graph.elements
        for i in range(len(adj.other_ids)):
            if adj.other_ids[i] != tgt:
                continue
            edge_id = adj.edge_ids[i]
            if edge_id in used:
                continue
            if not var.admits(elements[edge_id], self.x):
                continue
            env[conn.edge_var] = edge_id
            used.add(edge_id)
            yield from self._solve(verified)
            used.discard(edge_id)
            del env[conn.edge_var]

    def _expand(self, name: str, conn: _CompiledConn, adj, verified: int):
        env = self.env
        used = self.used
        x = self.x
        var = self.cp.vars[name]
        elements = self.graph.elements
        floor = x - var.cts_floor_off if var.cts_floor_off is not None else None
        ceil = x - var.cts_ceil_off
        edge_var = self.cp.vars[conn.edge_var] if conn.edge_var else None
        other_ids = adj.other_ids
        other_cts = adj.other_cts
        edge_cts = adj.edge_cts
        edge_ids = adj.edge_ids
        seen: set[int] = set()
        for i in range(len(other_ids)):
            cts = other_cts[i]
            if cts > ceil or (floor is not None and cts < floor):
                continue
            if edge_cts[i] > x:
                continue
            cand = other_ids[i]
            if cand in used:
                continue
            if edge_var is None:
                if cand in seen:
                    continue
                seen.add(cand)
            element = elements[cand]
            if not var.admits(element, x):
                continue
            edge_id = None
            if edge_var is not None:
                edge_id = edge_ids[i]
                if edge_id in used or not edge_var.admits(elements[edge_id], x):
                    continue
            env[name] = cand
            used.add(cand)
            if edge_id is not None:
                env[conn.edge_var] = edge_id
                used.add(edge_id)
            yield from self._solve(verified | (1 << conn.index))
            if edge_id is not None:
                used.discard(edge_id)
                del env[conn.edge_var]
            used.discard(cand)
            del env[name]

    def _scan_fallback(self, name: str, verified: int):
        if self.cp.label not in self._warned:
            self._warned.add(self.cp.label)
            logger.warning(
                "pattern %s: variable %r is not reachable from bound elements; "
                "falling back to a full per-type scan",
                self.cp.label,
                name,
            )
        env = self.env
        used = self.used
        var = self.cp.vars[name]
        elements = self.graph.elements
        x = self.x
        for type_name in var.allowed:
            for cand in list(self.graph.type_bucket(type_name)):
                if cand in used:
                    continue
                element = elements.get(cand)
                if element is None or element.type_name != type_name:
                    continue
                if not var.admits(element, x):
                    continue
                env[name] = cand
                used.add(cand)
                yield from self._solve(verified)
                used.discard(cand)
                del env[name]


# -- the monitor ---------------------------------------------------------------


class Monitor:
    """Live incremental evaluator of one query over one graph.

    Must be driven from the same serialized writer context that applies
    events. Verdicts for trigger timestamp x are finalized on the first
    activity after x (a later relevant creation, or an explicit flush).
    `query_ns` accumulates wall time spent matching (monotonic clock).
    """

    def __init__(self, query: StructuralQuery, graph: TemporalGraph):
        if not query.resolved:
            query = query.bind(graph.schema)
        self.query = query
        self.graph = graph
        self.query_ns = 0
        self._warned: set[str] = set()
        self._trigger = _CompiledPattern(query, query.trigger.pattern, graph, "trigger")
        self._stages: list[tuple[Stage, _CompiledPattern]] = [
            (stage, _CompiledPattern(query, stage.pattern, graph, f"stage{i}"))
            for i, stage in enumerate(query.stages, start=1)
        ]
        self._stage_var_names = [
            name for _, cp in self._stages for name in cp.vars
        ]
        self._reported: set[BindingKey] = set()
        self._elem_keys: dict[int, set[BindingKey]] = {}
        self._pending: dict[BindingKey, Binding] = {}
        self._pending_ts: Timepoint = -1
        self._outbox: list[MatchVerdict] = []
        self._subscription = graph.subscribe_creation(
            set(query.trigger.node_types) | set(query.trigger.edge_types),
            self._on_element,
        )
        graph.add_removal_listener(self._on_removed)

    # -- wiring ------------------------------------------------------------

    def detach(self) -> None:
        self._subscription.cancel()
        self.graph.remove_removal_listener(self._on_removed)

    def _on_element(self, element: ModelElement) -> None:
        self.on_creation(element.id, element.cts)

    def _on_removed(self, element_id: int) -> None:
        keys = self._elem_keys.pop(element_id, None)
        if keys:
            self._reported -= keys

    # -- evaluation ---------------------------------------------------------

    def on_creation(self, element_id: int, now: Timepoint) -> list[MatchVerdict]:
        """Record trigger matches containing the new element; returns the
        verdicts finalized by this call (from earlier timestamps)."""
        start = time.perf_counter_ns()
        out: list[MatchVerdict] = []
        if self._pending and now > self._pending_ts:
            out = self._finalize_pending()
        element = self.graph.elements[element_id]
        for binding in self._trigger_matches(element, now):
            key = binding_key(binding)
            if key in self._reported or key in self._pending:
                continue
            self._pending[key] = binding
            self._pending_ts = now
        self.query_ns += time.perf_counter_ns() - start
        return out

    def flush(self) -> list[MatchVerdict]:
        """Finalize all buffered trigger bindings."""
        start = time.perf_counter_ns()
        out = self._finalize_pending()
        self.query_ns += time.perf_counter_ns() - start
        return out

    def drain(self) -> list[MatchVerdict]:
        """Verdicts finalized since the last drain (subscription-driven use)."""
        out, self._outbox = self._outbox, []
        return out

    def _trigger_matches(self, element: ModelElement, now: Timepoint):
        searcher = _Searcher(self._trigger, self.graph, self._warned)
        found: dict[BindingKey, Binding] = {}
        if element.is_edge:
            for conn in self._trigger.conns:
                if conn.edge_type != element.type_name:
                    continue
                src_var = self._trigger.vars[conn.src]
                tgt_var = self._trigger.vars[conn.tgt]
                # distinct variables bind injectively; one variable on both
                # ends requires a self-loop edge
                if (element.src == element.tgt) != (conn.src == conn.tgt):
                    continue
                elements = self.graph.elements
                if not src_var.admits(elements[element.src], now):
                    continue
                if not tgt_var.admits(elements[element.tgt], now):
                    continue
                env = {conn.src: element.src, conn.tgt: element.tgt}
                if conn.edge_var is not None:
                    edge_cvar = self._trigger.vars[conn.edge_var]
                    if not edge_cvar.admits(element, now):
                        continue
                    env[conn.edge_var] = element.id
                for match in searcher.search(env, now, verified=1 << conn.index):
                    found.setdefault(binding_key(match), match)
        else:
            for name in self._trigger.node_vars:
                if not self._trigger.vars[name].admits(element, now):
                    continue
                for match in searcher.search({name: element.id}, now):
                    found.setdefault(binding_key(match), match)
        return found.values()

    def _finalize_pending(self) -> list[MatchVerdict]:
        out: list[MatchVerdict] = []
        if not self._pending:
            return out
        x = self._pending_ts
        pending, self._pending = self._pending, {}
        for key, binding in pending.items():
            status, witness = self._evaluate_body(binding, x)
            self._reported.add(key)
            for element_id in binding.values():
                self._elem_keys.setdefault(element_id, set()).add(key)
            out.append(MatchVerdict(x, binding, status, witness))
        self._outbox.extend(out)
        return out

    def _evaluate_body(self, trigger_binding: Binding, x: Timepoint):
        stages = self._stages
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
            stage, cp = stages[i]
            searcher = _Searcher(cp, self.graph, self._warned)
            if stage.positive:
                for match in searcher.search(env, x):
                    if solve(i + 1, match):
                        return True
                return False
            for _ in searcher.search(env, x):
                return False  # negative stage matched: this env is rejected
            return solve(i + 1, env)

        if solve(0, trigger_binding):
            witness = {
                name: witness_env[name]
                for name in self._stage_var_names
                if witness_env and name in witness_env
            }
            return SATISFIED, witness
        return stages[deepest][0].fail_verdict, None


def attach(query: StructuralQuery, graph: TemporalGraph) -> Monitor:
    """Attach a translated query to a graph; returns the live monitor."""
    return Monitor(query, graph)


# -- verdict CSV ----------------------------------------------------------------

VERDICT_HEADER = ["trigger_time", "status", "trigger_binding", "witness_binding"]


def write_verdicts(path, verdicts) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(VERDICT_HEADER)
        for v in verdicts:
            writer.writerow(
                [
                    v.trigger_time,
                    v.status,
                    format_binding(v.trigger_binding),
                    format_binding(v.witness),
                ]
            )


def read_verdicts(path) -> list[MatchVerdict]:
    out: list[MatchVerdict] = []
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != VERDICT_HEADER:
            raise ValueError(f"{path}: not a verdict CSV (header {header!r})")
        for row in reader:
            if len(row) != 4:
                raise ValueError(f"{path}: malformed row {row!r}")
            out.append(
                MatchVerdict(
                    trigger_time=int(row[0]),
                    trigger_binding=parse_binding(row[2]),
                    status=row[1],
                    witness=parse_binding(row[3]) or None,
                )
            )
    return out
