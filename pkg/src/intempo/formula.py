"""Temporal rule language: graph patterns plus metric temporal operators.

Surface syntax (one formula per file or string; whitespace free-form):

    formula   := 'forall-new' pattern 'implies' body | body
    body      := conj ( 'implies' body )?
    conj      := unit ( 'and' unit )*
    unit      := prefix ( ('until' | 'since') interval prefix )?
    prefix    := 'not' prefix
               | ('once' | 'once-lifespan' | 'once-occurrence') interval prefix
               | 'eventually' interval prefix
               | 'exists' pattern
               | '(' body ')'
    interval  := '[' INT ',' INT ']'
    pattern   := '[' item ( ',' item )* ']'
    item      := endpoint ( edge endpoint )*            -- chain of connections
               | NAME ':' TYPE '(' NAME ( ',' NAME )* ')'   -- linked-node sugar
    endpoint  := NAME ( ':' TYPE attrs? )?              -- declare or reference
    edge      := '-' ( NAME ':' )? TYPE '->' | '~>'     -- '~>' = type inferred
    attrs     := '{' NAME '=' value ( ',' NAME '=' value )* '}'
    value     := STRING | INT

Variable names are unique per formula and scope over the whole formula, so
a body pattern can reference an element bound by the trigger pattern. The
linked-node sugar `c:Connector(p, s)` declares `c` and adds one
type-inferred connection from `c` to each argument; it is equivalent to
`c:Connector, c ~> p, c ~> s`. Inferred edge types are resolved against a
schema when the translated query is bound to a graph.

`once[a,b]` constrains the wrapped condition to the window reaching from
`a` to `b` seconds into the past. The bare keyword defers the
lifespan/occurrence interpretation to translation time; the suffixed forms
pin it per operator. `until`, `since`, and `eventually` parse but have no
translation.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator, Union

from .errors import FormulaSyntaxError, MalformedIntervalError

NODE = "node"
EDGE = "edge"

AttrItems = tuple[tuple[str, Union[str, int]], ...]


@dataclass(frozen=True)
class Var:
    name: str
    kind: str  # NODE or EDGE
    type_name: str
    attrs: AttrItems = ()

    @property
    def attrs_dict(self) -> dict[str, str | int]:
        return dict(self.attrs)


@dataclass(frozen=True)
class Connection:
    """Directed structural connection between two node variables.

    `edge_type` is None for inferred (`~>`) connections; `edge_var` names
    the edge element when the formula binds it explicitly.
    """

    src: str
    tgt: str
    edge_type: str | None = None
    edge_var: str | None = None


@dataclass
class Pattern:
    """Declared variables plus connections; may reference outer variables."""

    variables: dict[str, Var] = field(default_factory=dict)
    connections: tuple[Connection, ...] = ()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Pattern):
            return NotImplemented
        return self.variables == other.variables and Counter(
            self.connections
        ) == Counter(other.connections)

    def var_names(self) -> list[str]:
        return list(self.variables)

    def referenced(self) -> set[str]:
        out = set(self.variables)
        for c in self.connections:
            out.add(c.src)
            out.add(c.tgt)
        return out


@dataclass
class ForallNew:
    pattern: Pattern
    body: "Formula"


@dataclass
class Exists:
    pattern: Pattern
    body: "Formula | None" = None


@dataclass
class Not:
    operand: "Formula"


@dataclass
class And:
    left: "Formula"
    right: "Formula"


@dataclass
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass
class OncePast:
    lo: int
    hi: int
    operand: "Formula"
    semantics: str | None = None  # None, "lifespan", or "occurrence"

    def __post_init__(self) -> None:
        _check_interval(self.lo, self.hi)


@dataclass
class Eventually:
    lo: int
    hi: int
    operand: "Formula"

    def __post_init__(self) -> None:
        _check_interval(self.lo, self.hi)


@dataclass
class Until:
    lo: int
    hi: int
    left: "Formula"
    right: "Formula"

    def __post_init__(self) -> None:
        _check_interval(self.lo, self.hi)


@dataclass
class Since:
    lo: int
    hi: int
    left: "Formula"
    right: "Formula"

    def __post_init__(self) -> None:
        _check_interval(self.lo, self.hi)


Formula = Union[ForallNew, Exists, Not, And, Implies, OncePast, Eventually, Until, Since]


def _check_interval(lo: int, hi: int) -> None:
    if lo < 0 or lo > hi:
        raise MalformedIntervalError(f"interval [{lo},{hi}] must satisfy 0 <= a <= b")


# -- tokenizer ---------------------------------------------------------------

_KEYWORDS = (
    "forall-new",
    "once-lifespan",
    "once-occurrence",
    "once",
    "exists",
    "implies",
    "and",
    "not",
    "until",
    "since",
    "eventually",
)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<kw>(?:forall-new|once-lifespan|once-occurrence|once|exists|implies
            |and|not|until|since|eventually)(?![A-Za-z0-9_]))
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<int>\d+)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<arrow>->)
  | (?P<squiggle>~>)
  | (?P<punct>[\[\]{}(),=:\-])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup or ""
        lexeme = m.group()
        if kind != "ws":
            if kind == "punct":
                kind = lexeme
            elif kind in ("arrow", "squiggle"):
                kind = lexeme
            tokens.append(_Token(kind, lexeme, line, col))
        newlines = lexeme.count("\n")
        if newlines:
            line += newlines
            col = len(lexeme) - lexeme.rfind("\n")
        else:
            col += len(lexeme)
        pos = m.end()
    tokens.append(_Token("eof", "", line, col))
    return tokens


# -- parser ------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0
        self.declared: dict[str, Var] = {}

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def next(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message: str, tok: _Token | None = None) -> FormulaSyntaxError:
        tok = tok or self.peek()
        return FormulaSyntaxError(message, tok.line, tok.column)

    def expect(self, kind: str) -> _Token:
        tok = self.next()
        if tok.kind != kind:
            raise self.error(f"expected {kind!r}, found {tok.text or 'end of input'!r}", tok)
        return tok

    def at_keyword(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind == "kw" and tok.text == word

    def eat_keyword(self, word: str) -> bool:
        if self.at_keyword(word):
            self.next()
            return True
        return False

    # formula := 'forall-new' pattern 'implies' body | body
    def parse_formula(self) -> Formula:
        if self.eat_keyword("forall-new"):
            pattern = self.parse_pattern()
            tok = self.peek()
            if not self.eat_keyword("implies"):
                raise self.error("expected 'implies' after trigger pattern", tok)
            body = self.parse_body()
            node: Formula = ForallNew(pattern, body)
        else:
            node = self.parse_body()
        tok = self.peek()
        if tok.kind != "eof":
            raise self.error(f"trailing input {tok.text!r}", tok)
        return node

    def parse_body(self) -> Formula:
        node = self.parse_conj()
        if self.eat_keyword("implies"):
            return Implies(node, self.parse_body())
        return node

    def parse_conj(self) -> Formula:
        node = self.parse_unit()
        while self.eat_keyword("and"):
            node = And(node, self.parse_unit())
        return node

    def parse_unit(self) -> Formula:
        node = self.parse_prefix()
        tok = self.peek()
        if tok.kind == "kw" and tok.text in ("until", "since"):
            self.next()
            lo, hi = self.parse_interval()
            rhs = self.parse_prefix()
            cls = Until if tok.text == "until" else Since
            return cls(lo, hi, node, rhs)
        return node

    def parse_prefix(self) -> Formula:
        tok = self.peek()
        if self.eat_keyword("not"):
            return Not(self.parse_prefix())
        if tok.kind == "kw" and tok.text in ("once", "once-lifespan", "once-occurrence"):
            self.next()
            lo, hi = self.parse_interval()
            semantics = None if tok.text == "once" else tok.text.split("-", 1)[1]
            return OncePast(lo, hi, self.parse_prefix(), semantics)
        if self.eat_keyword("eventually"):
            lo, hi = self.parse_interval()
            return Eventually(lo, hi, self.parse_prefix())
        if self.eat_keyword("exists"):
            return Exists(self.parse_pattern())
        if tok.kind == "(":
            self.next()
            node = self.parse_body()
            self.expect(")")
            return node
        raise self.error(f"expected a condition, found {tok.text or 'end of input'!r}", tok)

    def parse_interval(self) -> tuple[int, int]:
        self.expect("[")
        lo_tok = self.expect("int")
        self.expect(",")
        hi_tok = self.expect("int")
        self.expect("]")
        lo, hi = int(lo_tok.text), int(hi_tok.text)
        _check_interval(lo, hi)
        return lo, hi

    # -- patterns ------------------------------------------------------------

    def parse_pattern(self) -> Pattern:
        self.expect("[")
        variables: dict[str, Var] = {}
        connections: list[Connection] = []
        while True:
            self.parse_item(variables, connections)
            if not self.eat_keyword_punct(","):
                break
        self.expect("]")
        if not variables and not connections:
            raise self.error("empty pattern")
        return Pattern(variables, tuple(connections))

    def eat_keyword_punct(self, kind: str) -> bool:
        if self.peek().kind == kind:
            self.next()
            return True
        return False

    def parse_item(self, variables: dict[str, Var], connections: list[Connection]) -> None:
        name_tok = self.expect("name")
        if self.peek().kind == ":":
            self.next()
            type_tok = self.expect("name")
            if self.peek().kind == "(":
                self.next()
                owner = self.declare(name_tok, NODE, type_tok.text, (), variables)
                while True:
                    arg_tok = self.expect("name")
                    arg = self.reference(arg_tok)
                    if arg.kind != NODE:
                        raise self.error(f"{arg.name!r} is an edge variable", arg_tok)
                    connections.append(Connection(owner.name, arg.name))
                    if not self.eat_keyword_punct(","):
                        break
                self.expect(")")
                return
            attrs = self.parse_attrs()
            current = self.declare(name_tok, NODE, type_tok.text, attrs, variables)
        else:
            current = self.reference(name_tok)
            if current.kind != NODE:
                raise self.error(f"{current.name!r} is an edge variable", name_tok)
        while True:
            tok = self.peek()
            if tok.kind == "~>":
                self.next()
                edge_var = None
                edge_type = None
            elif tok.kind == "-":
                self.next()
                first = self.expect("name")
                if self.peek().kind == ":":
                    self.next()
                    type_tok = self.expect("name")
                    edge_var, edge_type = first.text, type_tok.text
                else:
                    edge_var, edge_type = None, first.text
                self.expect("->")
            else:
                return
            tgt_tok = self.expect("name")
            if self.peek().kind == ":":
                self.next()
                type_tok = self.expect("name")
                attrs = self.parse_attrs()
                target = self.declare(tgt_tok, NODE, type_tok.text, attrs, variables)
            else:
                target = self.reference(tgt_tok)
                if target.kind != NODE:
                    raise self.error(f"{target.name!r} is an edge variable", tgt_tok)
            if edge_var is not None:
                if edge_type is None:
                    raise self.error("a named edge needs an explicit type", tok)
                self.declare(
                    _Token("name", edge_var, tok.line, tok.column),
                    EDGE,
                    edge_type,
                    (),
                    variables,
                )
            connections.append(Connection(current.name, target.name, edge_type, edge_var))
            current = target

    def parse_attrs(self) -> AttrItems:
        if self.peek().kind != "{":
            return ()
        self.next()
        items: list[tuple[str, str | int]] = []
        while True:
            key = self.expect("name").text
            self.expect("=")
            tok = self.next()
            if tok.kind == "string":
                value: str | int = _unquote(tok.text)
            elif tok.kind == "int":
                value = int(tok.text)
            else:
                raise self.error("expected a string or integer value", tok)
            items.append((key, value))
            if not self.eat_keyword_punct(","):
                break
        self.expect("}")
        return tuple(items)

    def declare(
        self,
        tok: _Token,
        kind: str,
        type_name: str,
        attrs: AttrItems,
        variables: dict[str, Var],
    ) -> Var:
        if tok.text in self.declared:
            raise self.error(f"variable {tok.text!r} already declared", tok)
        var = Var(tok.text, kind, type_name, attrs)
        self.declared[tok.text] = var
        variables[tok.text] = var
        return var

    def reference(self, tok: _Token) -> Var:
        var = self.declared.get(tok.text)
        if var is None:
            raise self.error(f"unknown variable {tok.text!r}", tok)
        return var


def parse_formula(text: str) -> Formula:
    """Parse surface syntax into an AST; raises FormulaSyntaxError with
    line/column on malformed input."""
    return _Parser(text).parse_formula()


def _unquote(text: str) -> str:
    return text[1:-1].replace('\\"', '"').replace("\\\\", "\\")


# -- printer -----------------------------------------------------------------


def print_formula(node: Formula) -> str:
    """Deterministic surface text; parse_formula(print_formula(f)) == f."""
    if isinstance(node, ForallNew):
        return (
            f"forall-new {print_pattern(node.pattern)} implies {_print_body(node.body)}"
        )
    return _print_body(node)


def _print_body(node: Formula) -> str:
    if isinstance(node, Implies):
        left = _print_conj(node.left) if not isinstance(node.left, Implies) else _print_unit(node.left)
        return f"{left} implies {_print_body(node.right)}"
    return _print_conj(node)


def _print_conj(node: Formula) -> str:
    if isinstance(node, And):
        left = _print_conj(node.left) if isinstance(node.left, And) else _print_unit(node.left)
        return f"{left} and {_print_unit(node.right)}"
    return _print_unit(node)


def _print_unit(node: Formula) -> str:
    if isinstance(node, And):
        return f"({_print_body(node)})"
    if isinstance(node, Not):
        return f"not {_print_unit(node.operand)}"
    if isinstance(node, OncePast):
        kw = "once" if node.semantics is None else f"once-{node.semantics}"
        return f"{kw}[{node.lo},{node.hi}] {_print_unit(node.operand)}"
    if isinstance(node, Eventually):
        return f"eventually[{node.lo},{node.hi}] {_print_unit(node.operand)}"
    if isinstance(node, (Until, Since)):
        kw = "until" if isinstance(node, Until) else "since"
        return (
            f"{_print_operand(node.left)} {kw}[{node.lo},{node.hi}] "
            f"{_print_operand(node.right)}"
        )
    if isinstance(node, Exists):
        return f"exists {print_pattern(node.pattern)}"
    if isinstance(node, Implies):
        return f"({_print_body(node)})"
    if isinstance(node, ForallNew):
        raise ValueError("forall-new may only appear at the top level")
    raise TypeError(f"not a formula node: {node!r}")


def _print_operand(node: Formula) -> str:
    if isinstance(node, (And, Until, Since)):
        return f"({_print_unit(node)})"
    return _print_unit(node)


def print_pattern(pattern: Pattern) -> str:
    items = [_print_var(v) for v in pattern.variables.values() if v.kind == NODE]
    for c in pattern.connections:
        if c.edge_type is None:
            items.append(f"{c.src} ~> {c.tgt}")
        elif c.edge_var is not None:
            items.append(f"{c.src} -{c.edge_var}:{c.edge_type}-> {c.tgt}")
        else:
            items.append(f"{c.src} -{c.edge_type}-> {c.tgt}")
    return "[" + ", ".join(items) + "]"


def _print_var(var: Var) -> str:
    text = f"{var.name}:{var.type_name}"
    if var.attrs:
        parts = []
        for key, value in var.attrs:
            if isinstance(value, str):
                escaped = value.replace("\\", "\\\\").replace('"', '\\"')
                parts.append(f'{key}="{escaped}"')
            else:
                parts.append(f"{key}={value}")
        text += "{" + ", ".join(parts) + "}"
    return text


def iter_patterns(node: Formula) -> Iterator[Pattern]:
    """All patterns of a formula, outermost first."""
    if isinstance(node, ForallNew):
        yield node.pattern
        yield from iter_patterns(node.body)
    elif isinstance(node, Exists):
        yield node.pattern
        if node.body is not None:
            yield from iter_patterns(node.body)
    elif isinstance(node, Not):
        yield from iter_patterns(node.operand)
    elif isinstance(node, (And, Implies)):
        yield from iter_patterns(node.left)
        yield from iter_patterns(node.right)
    elif isinstance(node, (OncePast, Eventually)):
        yield from iter_patterns(node.operand)
    elif isinstance(node, (Until, Since)):
        yield from iter_patterns(node.left)
        yield from iter_patterns(node.right)
