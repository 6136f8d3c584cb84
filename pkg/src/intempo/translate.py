"""Lowering of temporal rules into trigger-driven structural queries.

A supported formula has the shape

    forall-new [trigger pattern] implies <body>

where the body is built from existential pattern stages, conjunction,
negation directly around an existential stage, past windows (`once[a,b]`)
directly around an (optionally negated) existential stage, and implication
in tail position (the guard of an implication scopes the remainder of the
condition). `until`, `since`, and `eventually` are declined with
UnsupportedOperator: there is no defined lowering for them here.

The lowering produces:

  * a trigger specification: the node and edge types whose creation starts
    an evaluation, plus the canonical new-element variable (the
    last-declared trigger variable); at run time any trigger-pattern
    element may be the newly created one,
  * an ordered list of pattern stages with per-stage miss verdicts, and
  * the timestamp constraint set `kappa` over variable cts/dts values and
    the evaluation timepoint x.

A `once[a,b]` stage constrains each variable declared in its pattern.
Under lifespan semantics the variable's lifespan must overlap the window:
`v.cts < x - a  and  v.dts > x - b`. Under occurrence semantics,
variables carrying attribute predicates (event-like value nodes) must have
been created inside the window: `x - b <= v.cts <= x - a`; the remaining
variables keep the lifespan form.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .errors import (
    FormulaError,
    NoTriggerError,
    SchemaMismatchError,
    UnboundVariableError,
    UnsupportedOperatorError,
)
from .formula import (
    EDGE,
    NODE,
    And,
    Connection,
    Eventually,
    Exists,
    ForallNew,
    Formula,
    Implies,
    Not,
    OncePast,
    Pattern,
    Since,
    Until,
    Var,
    print_pattern,
)
from .model import ModelElement, Timepoint
from .schema import TypeSchema

LIFESPAN = "lifespan"
OCCURRENCE = "occurrence"

VIOLATED = "VIOLATED"
SATISFIED = "SATISFIED"


# -- timestamp constraints ----------------------------------------------------


@dataclass(frozen=True)
class CtsEqualsNow:
    """Marks the canonical new-element variable: v.cts = x. Enforced by
    anchoring evaluation at newly created elements, not by filtering."""

    var: str

    def holds(self, element: ModelElement, x: Timepoint) -> bool:
        return element.cts == x

    def render(self) -> str:
        return f"{self.var}.cts = x"


@dataclass(frozen=True)
class CtsBefore:
    var: str
    offset: int  # v.cts < x - offset

    def holds(self, element: ModelElement, x: Timepoint) -> bool:
        return element.cts < x - self.offset

    def render(self) -> str:
        return f"{self.var}.cts < x - {self.offset}"


@dataclass(frozen=True)
class DtsAfter:
    var: str
    offset: int  # v.dts > x - offset

    def holds(self, element: ModelElement, x: Timepoint) -> bool:
        return element.dts > x - self.offset

    def render(self) -> str:
        return f"{self.var}.dts > x - {self.offset}"


@dataclass(frozen=True)
class CtsWithin:
    var: str
    lo_offset: int  # x - hi_offset <= v.cts <= x - lo_offset
    hi_offset: int

    def holds(self, element: ModelElement, x: Timepoint) -> bool:
        return x - self.hi_offset <= element.cts <= x - self.lo_offset

    def render(self) -> str:
        return f"x - {self.hi_offset} <= {self.var}.cts <= x - {self.lo_offset}"


Constraint = CtsEqualsNow | CtsBefore | DtsAfter | CtsWithin


@dataclass(frozen=True)
class Window:
    lo: int
    hi: int
    semantics: str


@dataclass
class Stage:
    """One pattern search step of the lowered query."""

    pattern: Pattern
    positive: bool = True
    window: Window | None = None
    fail_verdict: str = VIOLATED  # verdict when this stage decides a miss
    constraints: tuple[Constraint, ...] = ()

    def describe(self) -> str:
        kind = "exists" if self.positive else "not-exists"
        return f"{kind} {print_pattern(self.pattern)} on-miss: {self.fail_verdict}"


@dataclass
class TriggerSpec:
    """Creation events that start an evaluation of the query."""

    pattern: Pattern
    new_var: str
    node_types: frozenset[str]
    edge_types: frozenset[str]


@dataclass
class StructuralQuery:
    trigger: TriggerSpec
    stages: tuple[Stage, ...]
    kappa: tuple[Constraint, ...]
    semantics: str
    variables: dict[str, Var]
    resolved: bool = False
    _by_var: dict[str, tuple[Constraint, ...]] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        by_var: dict[str, list[Constraint]] = {}
        for c in self.kappa:
            if isinstance(c, CtsEqualsNow):
                continue  # positional, handled by anchored search
            by_var.setdefault(c.var, []).append(c)
        self._by_var = {v: tuple(cs) for v, cs in by_var.items()}

    def constraints_for(self, var: str) -> tuple[Constraint, ...]:
        return self._by_var.get(var, ())

    def plan_text(self) -> str:
        lines = [
            f"trigger exists {print_pattern(self.trigger.pattern)} "
            f"new={self.trigger.new_var}"
        ]
        for i, stage in enumerate(self.stages, start=1):
            lines.append(f"stage {i} {stage.describe()}")
        lines.append("kappa:")
        for c in self.kappa:
            lines.append(f"  {c.render()}")
        lines.append(f"semantics: {self.semantics}")
        return "\n".join(lines) + "\n"

    def bind(self, schema: TypeSchema) -> "StructuralQuery":
        """Resolve inferred edge types and check the query against a schema.

        Returns a resolved copy; raises SchemaMismatchError when a type is
        missing, an attribute is undeclared, or an inferred connection is
        ambiguous.
        """
        for var in self.variables.values():
            if var.kind == NODE:
                if not schema.is_node_type(var.type_name):
                    raise SchemaMismatchError(
                        f"variable {var.name!r}: unknown node type {var.type_name!r}"
                    )
                decls = schema.attr_decls(var.type_name)
                for attr, _val in var.attrs:
                    if attr not in decls:
                        raise SchemaMismatchError(
                            f"variable {var.name!r}: type {var.type_name!r} "
                            f"has no attribute {attr!r}"
                        )
            else:
                if not schema.is_edge_type(var.type_name):
                    raise SchemaMismatchError(
                        f"variable {var.name!r}: unknown edge type {var.type_name!r}"
                    )

        def resolve_pattern(pattern: Pattern) -> Pattern:
            connections = tuple(
                self._resolve_connection(c, schema) for c in pattern.connections
            )
            return Pattern(dict(pattern.variables), connections)

        trigger_pattern = resolve_pattern(self.trigger.pattern)
        trigger = TriggerSpec(
            pattern=trigger_pattern,
            new_var=self.trigger.new_var,
            node_types=self.trigger.node_types,
            edge_types=frozenset(
                c.edge_type for c in trigger_pattern.connections if c.edge_type
            ),
        )
        stages = tuple(
            replace(stage, pattern=resolve_pattern(stage.pattern))
            for stage in self.stages
        )
        return StructuralQuery(
            trigger=trigger,
            stages=stages,
            kappa=self.kappa,
            semantics=self.semantics,
            variables=self.variables,
            resolved=True,
        )

    def _resolve_connection(self, c: Connection, schema: TypeSchema) -> Connection:
        src_type = self.variables[c.src].type_name
        tgt_type = self.variables[c.tgt].type_name
        if c.edge_type is not None:
            decl = schema.edge_types.get(c.edge_type)
            if decl is None:
                raise SchemaMismatchError(f"unknown edge type {c.edge_type!r}")
            if not schema.is_subtype(src_type, decl.source) or not schema.is_subtype(
                tgt_type, decl.target
            ):
                raise SchemaMismatchError(
                    f"edge {c.edge_type!r} cannot connect "
                    f"{src_type!r} to {tgt_type!r}"
                )
            return c
        candidates = [
            decl.name
            for decl in schema.edge_types.values()
            if schema.is_subtype(src_type, decl.source)
            and schema.is_subtype(tgt_type, decl.target)
        ]
        if len(candidates) != 1:
            raise SchemaMismatchError(
                f"connection {c.src} ~> {c.tgt}: "
                f"{'no' if not candidates else 'ambiguous'} edge type from "
                f"{src_type!r} to {tgt_type!r} (candidates: {candidates})"
            )
        return Connection(c.src, c.tgt, candidates[0], c.edge_var)


# -- operations ---------------------------------------------------------------


def derive_trigger_types(formula: Formula) -> set[str]:
    """Node types whose creation may start an evaluation (the types of the
    variables of the top-level forall-new pattern)."""
    if not isinstance(formula, ForallNew):
        raise NoTriggerError("formula has no top-level forall-new")
    return {
        var.type_name for var in formula.pattern.variables.values() if var.kind == NODE
    }


def translate(
    formula: Formula,
    schema: TypeSchema | None = None,
    semantics: str = LIFESPAN,
) -> StructuralQuery:
    """Lower a supported formula into a StructuralQuery.

    `semantics` supplies the interpretation for `once` operators that do
    not pin one themselves. Passing a schema resolves inferred edge types
    eagerly; otherwise resolution happens when the query is attached.
    """
    if semantics not in (LIFESPAN, OCCURRENCE):
        raise ValueError(f"unknown semantics {semantics!r}")
    if not isinstance(formula, ForallNew):
        raise NoTriggerError("only forall-new formulas are translatable")

    variables: dict[str, Var] = {}
    _collect_vars(formula.pattern, variables)
    _check_connections(formula.pattern, variables, set(variables))

    stages: list[Stage] = []
    _build_stages(formula.body, stages, variables, semantics, window=None)

    bound = set(formula.pattern.variables)
    for stage in stages:
        scope = bound | set(stage.pattern.variables)
        _check_connections(stage.pattern, variables, scope)
        if stage.positive:
            bound |= set(stage.pattern.variables)

    trigger_vars = list(formula.pattern.variables)
    if not trigger_vars:
        raise FormulaError("trigger pattern declares no variables")
    new_var = trigger_vars[-1]
    kappa: list[Constraint] = [CtsEqualsNow(new_var)]
    for stage in stages:
        kappa.extend(stage.constraints)

    query = StructuralQuery(
        trigger=TriggerSpec(
            pattern=formula.pattern,
            new_var=new_var,
            node_types=frozenset(
                v.type_name
                for v in formula.pattern.variables.values()
                if v.kind == NODE
            ),
            edge_types=frozenset(
                c.edge_type for c in formula.pattern.connections if c.edge_type
            ),
        ),
        stages=tuple(stages),
        kappa=tuple(kappa),
        semantics=semantics,
        variables=variables,
    )
    if schema is not None:
        query = query.bind(schema)
    return query


def _collect_vars(pattern: Pattern, variables: dict[str, Var]) -> None:
    for name, var in pattern.variables.items():
        if name in variables:
            raise FormulaError(f"variable {name!r} declared twice")
        variables[name] = var


def _check_connections(
    pattern: Pattern, variables: dict[str, Var], scope: set[str]
) -> None:
    for c in pattern.connections:
        for endpoint in (c.src, c.tgt):
            if endpoint not in scope:
                raise UnboundVariableError(
                    f"connection references unbound variable {endpoint!r}"
                )
            if variables[endpoint].kind != NODE:
                raise FormulaError(f"connection endpoint {endpoint!r} is not a node")
        if c.edge_var is not None and c.edge_var not in pattern.variables:
            raise UnboundVariableError(f"edge variable {c.edge_var!r} not declared")


def _build_stages(
    node: Formula,
    stages: list[Stage],
    variables: dict[str, Var],
    default_semantics: str,
    window: Window | None,
    negated: bool = False,
    fail_verdict: str = VIOLATED,
) -> None:
    if isinstance(node, (Until, Since, Eventually)):
        raise UnsupportedOperatorError(
            f"{type(node).__name__.lower()} has no defined lowering"
        )
    if isinstance(node, ForallNew):
        raise UnsupportedOperatorError("forall-new may only appear at the top level")
    if isinstance(node, OncePast):
        if window is not None:
            raise UnsupportedOperatorError("nested past windows are not supported")
        if not _is_atom(node.operand):
            raise UnsupportedOperatorError(
                "a past window must wrap an (optionally negated) exists"
            )
        sem = node.semantics or default_semantics
        _build_stages(
            node.operand,
            stages,
            variables,
            default_semantics,
            Window(node.lo, node.hi, sem),
            negated,
            fail_verdict,
        )
        return
    if isinstance(node, Not):
        if negated:
            raise UnsupportedOperatorError("double negation is not supported")
        if not isinstance(node.operand, (Exists, OncePast)) or not _is_atom(node):
            raise UnsupportedOperatorError(
                "negation is only supported directly around an exists stage"
            )
        _build_stages(
            node.operand,
            stages,
            variables,
            default_semantics,
            window,
            negated=True,
            fail_verdict=fail_verdict,
        )
        return
    if isinstance(node, And):
        if window is not None or negated:
            raise UnsupportedOperatorError("conjunction cannot be window-scoped or negated")
        if _has_top_implies(node.left):
            raise UnsupportedOperatorError(
                "an implication must scope the remainder of the condition"
            )
        _build_stages(node.left, stages, variables, default_semantics, None, False, fail_verdict)
        _build_stages(node.right, stages, variables, default_semantics, None, False, fail_verdict)
        return
    if isinstance(node, Implies):
        if window is not None or negated:
            raise UnsupportedOperatorError("implication cannot be window-scoped or negated")
        if _has_top_implies(node.left):
            raise UnsupportedOperatorError("an implication guard cannot itself imply")
        guard_start = len(stages)
        _build_stages(
            node.left, stages, variables, default_semantics, None, False, SATISFIED
        )
        for stage in stages[guard_start:]:
            if not stage.positive:
                raise UnsupportedOperatorError(
                    "an implication guard must be a positive condition"
                )
        _build_stages(
            node.right, stages, variables, default_semantics, None, False, fail_verdict
        )
        return
    if isinstance(node, Exists):
        if negated and node.body is not None:
            raise UnsupportedOperatorError("a negated exists cannot nest a body")
        if window is not None and node.body is not None:
            raise UnsupportedOperatorError("a windowed exists cannot nest a body")
        _collect_vars(node.pattern, variables)
        constraints: tuple[Constraint, ...] = ()
        if window is not None:
            constraints = _window_constraints(node.pattern, window)
        stages.append(
            Stage(
                pattern=node.pattern,
                positive=not negated,
                window=window,
                fail_verdict=fail_verdict,
                constraints=constraints,
            )
        )
        if node.body is not None:
            _build_stages(
                node.body, stages, variables, default_semantics, None, False, fail_verdict
            )
        return
    raise UnsupportedOperatorError(f"unsupported formula node {type(node).__name__}")


def _is_atom(node: Formula) -> bool:
    if isinstance(node, Not):
        return isinstance(node.operand, Exists) and node.operand.body is None
    return isinstance(node, Exists) and node.body is None


def _has_top_implies(node: Formula) -> bool:
    if isinstance(node, Implies):
        return True
    if isinstance(node, And):
        return _has_top_implies(node.left) or _has_top_implies(node.right)
    return False


def _window_constraints(pattern: Pattern, window: Window) -> tuple[Constraint, ...]:
    out: list[Constraint] = []
    for var in pattern.variables.values():
        if window.semantics == OCCURRENCE and var.attrs:
            out.append(CtsWithin(var.name, window.lo, window.hi))
        else:
            out.append(CtsBefore(var.name, window.lo))
            out.append(DtsAfter(var.name, window.hi))
    return tuple(out)
