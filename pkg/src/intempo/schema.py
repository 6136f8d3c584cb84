"""Type schema for typed attributed graphs.

A schema declares node types (with attribute declarations and single or
multiple supertype links) and edge types (with source and target node
types). Subtyping is honored wherever a type is matched: per-type indices,
creation subscriptions, pattern variables, and edge endpoint checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import SchemaError, UnknownTypeError

AttrValue = str | int


@dataclass(frozen=True)
class NodeTypeDecl:
    name: str
    attributes: tuple[tuple[str, str], ...] = ()  # (attr name, "string"|"int")
    supertypes: tuple[str, ...] = ()


@dataclass(frozen=True)
class EdgeTypeDecl:
    name: str
    source: str
    target: str


@dataclass
class TypeSchema:
    """Validated collection of node and edge type declarations."""

    node_types: dict[str, NodeTypeDecl] = field(default_factory=dict)
    edge_types: dict[str, EdgeTypeDecl] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self._supertype_closure: dict[str, frozenset[str]] = {}
        self._subtype_closure: dict[str, frozenset[str]] = {}
        self._attr_decls: dict[str, dict[str, str]] = {}
        self._validate()

    @classmethod
    def build(
        cls,
        node_types: list[NodeTypeDecl],
        edge_types: list[EdgeTypeDecl],
    ) -> "TypeSchema":
        nodes: dict[str, NodeTypeDecl] = {}
        for decl in node_types:
            if decl.name in nodes:
                raise SchemaError(f"duplicate node type {decl.name!r}")
            nodes[decl.name] = decl
        edges: dict[str, EdgeTypeDecl] = {}
        for decl in edge_types:
            if decl.name in edges or decl.name in nodes:
                raise SchemaError(f"duplicate type name {decl.name!r}")
            edges[decl.name] = decl
        return cls(nodes, edges)

    def _validate(self) -> None:
        for name, decl in self.node_types.items():
            for sup in decl.supertypes:
                if sup not in self.node_types:
                    raise SchemaError(f"node type {name!r} extends unknown type {sup!r}")
        for name in self.node_types:
            self._supertype_closure[name] = frozenset(self._walk_supertypes(name, ()))
        subs: dict[str, set[str]] = {name: {name} for name in self.node_types}
        for name in self.node_types:
            for sup in self._supertype_closure[name]:
                subs[sup].add(name)
        self._subtype_closure = {name: frozenset(s) for name, s in subs.items()}
        for name, decl in self.edge_types.items():
            if decl.source not in self.node_types:
                raise SchemaError(f"edge type {name!r} has unknown source {decl.source!r}")
            if decl.target not in self.node_types:
                raise SchemaError(f"edge type {name!r} has unknown target {decl.target!r}")
        for name in self.node_types:
            attrs: dict[str, str] = {}
            for sup in sorted(self._supertype_closure[name]):
                for attr, kind in self.node_types[sup].attributes:
                    attrs[attr] = kind
            for attr, kind in self.node_types[name].attributes:
                attrs[attr] = kind
            self._attr_decls[name] = attrs

    def _walk_supertypes(self, name: str, stack: tuple[str, ...]) -> set[str]:
        if name in stack:
            cycle = " -> ".join(stack + (name,))
            raise SchemaError(f"cyclic supertype chain: {cycle}")
        out: set[str] = {name}
        for sup in self.node_types[name].supertypes:
            out |= self._walk_supertypes(sup, stack + (name,))
        return out

    # -- queries ----------------------------------------------------------

    def is_node_type(self, name: str) -> bool:
        return name in self.node_types

    def is_edge_type(self, name: str) -> bool:
        return name in self.edge_types

    def require_node_type(self, name: str) -> NodeTypeDecl:
        try:
            return self.node_types[name]
        except KeyError:
            raise UnknownTypeError(f"unknown node type {name!r}") from None

    def require_edge_type(self, name: str) -> EdgeTypeDecl:
        try:
            return self.edge_types[name]
        except KeyError:
            raise UnknownTypeError(f"unknown edge type {name!r}") from None

    def require_type(self, name: str) -> None:
        if name not in self.node_types and name not in self.edge_types:
            raise UnknownTypeError(f"unknown type {name!r}")

    def supertypes_of(self, name: str) -> frozenset[str]:
        """All supertypes of `name`, including `name` itself."""
        self.require_node_type(name)
        return self._supertype_closure[name]

    def subtypes_of(self, name: str) -> frozenset[str]:
        """All subtypes of `name`, including `name` itself."""
        self.require_node_type(name)
        return self._subtype_closure[name]

    def is_subtype(self, sub: str, sup: str) -> bool:
        self.require_node_type(sub)
        return sup in self._supertype_closure[sub]

    def attr_decls(self, node_type: str) -> dict[str, str]:
        """Declared attributes for a node type, inherited ones included."""
        self.require_node_type(node_type)
        return self._attr_decls[node_type]

    def check_attributes(self, node_type: str, attributes: dict[str, AttrValue]) -> None:
        decls = self.attr_decls(node_type)
        for attr, value in attributes.items():
            kind = decls.get(attr)
            if kind is None:
                raise SchemaError(f"type {node_type!r} has no attribute {attr!r}")
            if kind == "string" and not isinstance(value, str):
                raise SchemaError(f"attribute {attr!r} of {node_type!r} must be a string")
            if kind == "int" and not isinstance(value, int):
                raise SchemaError(f"attribute {attr!r} of {node_type!r} must be an int")
