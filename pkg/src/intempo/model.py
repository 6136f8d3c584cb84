"""Runtime model with history: a typed attributed graph whose elements carry
creation/deletion timestamps.

Elements are never removed by logical deletion; a deletion only closes the
element's lifespan by setting its deletion timestamp (`dts`). Physical
removal happens exclusively through the pruner. An element exists at
timepoint x iff cts <= x < dts (half-open lifespan, so a deletion at x
excludes x).

Timepoints are non-negative integer seconds. The INFINITY sentinel is the
largest 64-bit signed value and compares greater than every finite
timepoint.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator, Mapping

from .errors import (
    DoubleDeletionError,
    DuplicateNameError,
    EndpointMissingOrDeadError,
    SchemaError,
    TimestampRegressionError,
    UnknownElementError,
    UnknownTypeError,
)
from .schema import AttrValue, TypeSchema

Timepoint = int
INFINITY: Timepoint = 2**63 - 1


@dataclass(slots=True)
class ModelElement:
    """A stored node or edge. `src`/`tgt` are None for nodes.

    Attributes are immutable after creation; value history is modeled by
    creating new value nodes instead of updating attributes in place.
    """

    id: int
    name: str
    type_name: str
    attributes: Mapping[str, AttrValue]
    cts: Timepoint
    dts: Timepoint
    src: int | None = None
    tgt: int | None = None

    @property
    def is_edge(self) -> bool:
        return self.src is not None

    @property
    def is_live(self) -> bool:
        return self.dts == INFINITY

    def exists_at(self, x: Timepoint) -> bool:
        return self.cts <= x < self.dts


# -- change events ---------------------------------------------------------


@dataclass
class CreateNode:
    type_name: str
    name: str
    attributes: dict[str, AttrValue] = field(default_factory=dict)


@dataclass
class CreateEdge:
    type_name: str
    name: str
    src: str
    tgt: str


@dataclass
class DeleteElement:
    name: str


Action = CreateNode | CreateEdge | DeleteElement


@dataclass
class ChangeEvent:
    """A timestamped create/delete instruction. Sequences of events fed to a
    graph must be non-decreasing in timestamp."""

    timestamp: Timepoint
    action: Action


@dataclass
class Delta:
    """Element ids created and logically deleted by one applied event."""

    created: list[int] = field(default_factory=list)
    deleted: list[int] = field(default_factory=list)


# -- internal index structures ----------------------------------------------


class _AdjList:
    """Incident edges of one node for one edge type and direction.

    Parallel lists keep, per incident edge: the edge element id, the edge's
    cts, the node id at the other end, and that node's cts. Candidate scans
    read the timestamp columns without an element lookup; creation
    timestamps are immutable so the copies stay valid. Removal swaps with
    the last entry, O(1).
    """

    __slots__ = ("edge_ids", "edge_cts", "other_ids", "other_cts", "_pos")

    def __init__(self) -> None:
        self.edge_ids: list[int] = []
        self.edge_cts: list[int] = []
        self.other_ids: list[int] = []
        self.other_cts: list[int] = []
        self._pos: dict[int, int] = {}

    def __len__(self) -> int:
        return len(self.edge_ids)

    def add(self, edge_id: int, edge_cts: int, other_id: int, other_cts: int) -> None:
        self._pos[edge_id] = len(self.edge_ids)
        self.edge_ids.append(edge_id)
        self.edge_cts.append(edge_cts)
        self.other_ids.append(other_id)
        self.other_cts.append(other_cts)

    def discard(self, edge_id: int) -> None:
        i = self._pos.pop(edge_id, None)
        if i is None:
            return
        last = len(self.edge_ids) - 1
        if i != last:
            self.edge_ids[i] = self.edge_ids[last]
            self.edge_cts[i] = self.edge_cts[last]
            self.other_ids[i] = self.other_ids[last]
            self.other_cts[i] = self.other_cts[last]
            self._pos[self.edge_ids[i]] = i
        self.edge_ids.pop()
        self.edge_cts.pop()
        self.other_ids.pop()
        self.other_cts.pop()


class _Subscription:
    __slots__ = ("graph", "type_names", "callback", "active")

    def __init__(self, graph: "TemporalGraph", type_names: frozenset[str], callback):
        self.graph = graph
        self.type_names = type_names
        self.callback = callback
        self.active = True

    def cancel(self) -> None:
        if self.active:
            self.active = False
            self.graph._drop_subscription(self)


class TemporalGraph:
    """In-memory runtime model with history.

    Single-writer: apply_event and pruning must be externally serialized;
    reads may run between writes. No internal locking is provided.
    """

    def __init__(self, schema: TypeSchema):
        self.schema = schema
        self.elements: dict[int, ModelElement] = {}
        self.last_event_ts: Timepoint = 0
        self._next_id = 0
        self._names: dict[str, int] = {}
        # Per-type buckets include subtype members; deletion relies on the
        # dict's amortized tombstone-and-compact behavior.
        self._by_type: dict[str, dict[int, None]] = {
            t: {} for t in list(schema.node_types) + list(schema.edge_types)
        }
        self._adj: dict[tuple[int, str, bool], _AdjList] = {}
        self._creation_subs: dict[str, list[_Subscription]] = {}
        self._removal_listeners: list[Callable[[int], None]] = []
        self._node_count = 0
        self._edge_count = 0

    # -- accessors ---------------------------------------------------------

    def __len__(self) -> int:
        return len(self.elements)

    @property
    def node_count(self) -> int:
        return self._node_count

    @property
    def edge_count(self) -> int:
        return self._edge_count

    def element(self, element_id: int) -> ModelElement:
        try:
            return self.elements[element_id]
        except KeyError:
            raise UnknownElementError(f"no element with id {element_id}") from None

    def resolve(self, name: str) -> int:
        try:
            return self._names[name]
        except KeyError:
            raise UnknownElementError(f"no element named {name!r}") from None

    def elements_of_type(
        self, type_name: str, at: Timepoint | None = None
    ) -> Iterator[int]:
        """Ids of stored elements of a type (subtypes included).

        Without `at`, every stored element of the type is yielded, logically
        deleted ones included. With `at` = x, only elements whose half-open
        lifespan contains x (cts <= x < dts).
        """
        self.schema.require_type(type_name)
        bucket = self._by_type[type_name]
        if at is None:
            yield from bucket
            return
        elements = self.elements
        for eid in bucket:
            if elements[eid].exists_at(at):
                yield eid

    def type_bucket(self, type_name: str) -> dict[int, None]:
        """Raw per-type index bucket (read-only view for matchers)."""
        return self._by_type[type_name]

    def adjacency(self, node_id: int, edge_type: str, outgoing: bool) -> _AdjList | None:
        return self._adj.get((node_id, edge_type, outgoing))

    # -- notifications -----------------------------------------------------

    def subscribe_creation(self, type_names, callback) -> _Subscription:
        """Invoke `callback(element)` synchronously, after index update, for
        every subsequent creation whose type is in (or a subtype of) the set.

        `type_names` may contain node types (subtype-closed) and edge types.
        """
        expanded: set[str] = set()
        for name in type_names:
            if self.schema.is_node_type(name):
                expanded |= self.schema.subtypes_of(name)
            elif self.schema.is_edge_type(name):
                expanded.add(name)
            else:
                raise UnknownTypeError(f"unknown type {name!r}")
        sub = _Subscription(self, frozenset(expanded), callback)
        for name in expanded:
            self._creation_subs.setdefault(name, []).append(sub)
        return sub

    def _drop_subscription(self, sub: _Subscription) -> None:
        for name in sub.type_names:
            subs = self._creation_subs.get(name)
            if subs and sub in subs:
                subs.remove(sub)

    def add_removal_listener(self, callback: Callable[[int], None]) -> None:
        """Internal hook: called with each element id physically removed."""
        self._removal_listeners.append(callback)

    def remove_removal_listener(self, callback: Callable[[int], None]) -> None:
        if callback in self._removal_listeners:
            self._removal_listeners.remove(callback)

    def _notify_creation(self, element: ModelElement) -> None:
        subs = self._creation_subs.get(element.type_name)
        if subs:
            for sub in list(subs):
                if sub.active:
                    sub.callback(element)

    # -- event application ---------------------------------------------------

    def apply_event(self, event: ChangeEvent) -> Delta:
        """Apply one timestamped change; returns created/deleted element ids.

        Creations set cts to the event timestamp and dts to INFINITY.
        Deletion only sets dts; deleting a node also closes the lifespan of
        its live incident edges (an edge cannot outlive an endpoint).
        """
        ts = event.timestamp
        if ts < 0:
            raise TimestampRegressionError(f"negative timestamp {ts}")
        if ts < self.last_event_ts:
            raise TimestampRegressionError(
                f"timestamp {ts} precedes already applied {self.last_event_ts}"
            )
        action = event.action
        delta = Delta()
        if isinstance(action, CreateNode):
            self._create_node(action, ts, delta)
        elif isinstance(action, CreateEdge):
            self._create_edge(action, ts, delta)
        elif isinstance(action, DeleteElement):
            self._delete(action.name, ts, delta)
        else:
            raise TypeError(f"unsupported action {action!r}")
        self.last_event_ts = ts
        return delta

    def apply_events(self, events) -> Delta:
        total = Delta()
        for event in events:
            d = self.apply_event(event)
            total.created.extend(d.created)
            total.deleted.extend(d.deleted)
        return total

    def _claim_name(self, name: str) -> None:
        if name in self._names:
            raise DuplicateNameError(f"element name {name!r} already in use")

    def _create_node(self, action: CreateNode, ts: Timepoint, delta: Delta) -> None:
        decl = self.schema.require_node_type(action.type_name)
        self._claim_name(action.name)
        self.schema.check_attributes(decl.name, action.attributes)
        element = ModelElement(
            id=self._next_id,
            name=action.name,
            type_name=decl.name,
            attributes=action.attributes,
            cts=ts,
            dts=INFINITY,
        )
        self._next_id += 1
        self.elements[element.id] = element
        self._names[action.name] = element.id
        for t in self.schema.supertypes_of(decl.name):
            self._by_type[t][element.id] = None
        self._node_count += 1
        delta.created.append(element.id)
        self._notify_creation(element)

    def _create_edge(self, action: CreateEdge, ts: Timepoint, delta: Delta) -> None:
        decl = self.schema.require_edge_type(action.type_name)
        self._claim_name(action.name)
        src = self._live_endpoint(action.src, action.type_name)
        tgt = self._live_endpoint(action.tgt, action.type_name)
        if not self.schema.is_subtype(src.type_name, decl.source):
            raise SchemaError(
                f"edge {action.type_name!r} expects source {decl.source!r}, "
                f"got {src.type_name!r}"
            )
        if not self.schema.is_subtype(tgt.type_name, decl.target):
            raise SchemaError(
                f"edge {action.type_name!r} expects target {decl.target!r}, "
                f"got {tgt.type_name!r}"
            )
        element = ModelElement(
            id=self._next_id,
            name=action.name,
            type_name=decl.name,
            attributes={},
            cts=ts,
            dts=INFINITY,
            src=src.id,
            tgt=tgt.id,
        )
        self._next_id += 1
        self.elements[element.id] = element
        self._names[action.name] = element.id
        self._by_type[decl.name][element.id] = None
        self._adj_list(src.id, decl.name, True).add(element.id, ts, tgt.id, tgt.cts)
        self._adj_list(tgt.id, decl.name, False).add(element.id, ts, src.id, src.cts)
        self._edge_count += 1
        delta.created.append(element.id)
        self._notify_creation(element)

    def _live_endpoint(self, name: str, edge_type: str) -> ModelElement:
        eid = self._names.get(name)
        if eid is None:
            raise EndpointMissingOrDeadError(
                f"edge {edge_type!r} references missing element {name!r}"
            )
        element = self.elements[eid]
        if element.is_edge:
            raise EndpointMissingOrDeadError(
                f"edge {edge_type!r} endpoint {name!r} is an edge, not a node"
            )
        if not element.is_live:
            raise EndpointMissingOrDeadError(
                f"edge {edge_type!r} endpoint {name!r} was deleted at {element.dts}"
            )
        return element

    def _adj_list(self, node_id: int, edge_type: str, outgoing: bool) -> _AdjList:
        key = (node_id, edge_type, outgoing)
        lst = self._adj.get(key)
        if lst is None:
            lst = self._adj[key] = _AdjList()
        return lst

    def _delete(self, name: str, ts: Timepoint, delta: Delta) -> None:
        eid = self._names.get(name)
        if eid is None:
            raise UnknownElementError(f"cannot delete unknown element {name!r}")
        element = self.elements[eid]
        if not element.is_live:
            raise DoubleDeletionError(
                f"element {name!r} already deleted at {element.dts}"
            )
        element.dts = ts
        delta.deleted.append(eid)
        if not element.is_edge:
            for edge_id in self._incident_edge_ids(eid):
                edge = self.elements[edge_id]
                if edge.is_live:
                    edge.dts = ts
                    delta.deleted.append(edge_id)

    def _incident_edge_ids(self, node_id: int) -> list[int]:
        out: list[int] = []
        for edge_type in self.schema.edge_types:
            for outgoing in (True, False):
                lst = self._adj.get((node_id, edge_type, outgoing))
                if lst:
                    out.extend(lst.edge_ids)
        return out

    # -- physical removal (used by the pruner) -------------------------------

    def remove_node(self, node_id: int) -> int:
        """Physically remove a node and all incident edges; returns the
        number of edges removed with it. O(1) amortized per element."""
        element = self.element(node_id)
        if element.is_edge:
            raise UnknownElementError(f"element {node_id} is an edge, not a node")
        removed_edges = 0
        for edge_id in self._incident_edge_ids(node_id):
            self.remove_edge(edge_id)
            removed_edges += 1
        for t in self.schema.supertypes_of(element.type_name):
            self._by_type[t].pop(node_id, None)
        for edge_type in self.schema.edge_types:
            self._adj.pop((node_id, edge_type, True), None)
            self._adj.pop((node_id, edge_type, False), None)
        del self.elements[node_id]
        del self._names[element.name]
        self._node_count -= 1
        for listener in self._removal_listeners:
            listener(node_id)
        return removed_edges

    def remove_edge(self, edge_id: int) -> None:
        element = self.element(edge_id)
        if not element.is_edge:
            raise UnknownElementError(f"element {edge_id} is a node, not an edge")
        self._by_type[element.type_name].pop(edge_id, None)
        src_list = self._adj.get((element.src, element.type_name, True))
        if src_list is not None:
            src_list.discard(edge_id)
        tgt_list = self._adj.get((element.tgt, element.type_name, False))
        if tgt_list is not None:
            tgt_list.discard(edge_id)
        del self.elements[edge_id]
        del self._names[element.name]
        self._edge_count -= 1
        for listener in self._removal_listeners:
            listener(edge_id)


def subscribe_creation(graph: TemporalGraph, type_names, callback) -> _Subscription:
    return graph.subscribe_creation(type_names, callback)


def apply_event(graph: TemporalGraph, event: ChangeEvent) -> Delta:
    return graph.apply_event(event)


def elements_of_type(graph: TemporalGraph, type_name: str, at: Timepoint | None = None):
    return graph.elements_of_type(type_name, at)
