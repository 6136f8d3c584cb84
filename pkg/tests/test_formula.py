from __future__ import annotations

from random import Random

import pytest

from intempo.errors import FormulaSyntaxError, MalformedIntervalError
from intempo.formula import (
    And,
    Connection,
    Eventually,
    Exists,
    ForallNew,
    Implies,
    Not,
    OncePast,
    Pattern,
    Since,
    Until,
    Var,
    parse_formula,
    print_formula,
)
from intempo.simulator import ANTIBIOTIC_RULE


def test_parse_antibiotic_rule_matches_hand_built_ast():
    parsed = parse_formula(ANTIBIOTIC_RULE)
    phi1 = Pattern(
        {
            "sensor": Var("sensor", "node", "PatientSensor"),
            "datum": Var("datum", "node", "StringValue", (("value", "op"),)),
        },
        (Connection("sensor", "datum", "emits"),),
    )
    phi2 = Pattern(
        {
            "pump": Var("pump", "node", "Pump"),
            "reac": Var("reac", "node", "StringValue", (("value", "anti"),)),
            "connector": Var("connector", "node", "Connector"),
        },
        (
            Connection("pump", "reac", "takes"),
            Connection("connector", "pump"),
            Connection("connector", "sensor"),
        ),
    )
    expected = ForallNew(phi1, OncePast(0, 3600, Exists(phi2)))
    assert parsed == expected


def test_malformed_interval():
    with pytest.raises(MalformedIntervalError):
        parse_formula("once[10,5] exists [p:Pump]")


def test_syntax_error_carries_position():
    with pytest.raises(FormulaSyntaxError) as exc:
        parse_formula("forall-new [p:Pump] implies exists [q:]")
    assert exc.value.line == 1
    assert exc.value.column > 30


@pytest.mark.parametrize(
    "text",
    [
        "exists []",
        "forall-new [p:Pump] exists [q:Pump]",  # missing implies
        "exists [p:Pump, p:Pump]",  # redeclaration
        "exists [p:Pump -takes-> unknown]",  # unknown reference
        'exists [p:Pump{value=}]',
    ],
)
def test_rejected_surface_forms(text):
    with pytest.raises(FormulaSyntaxError):
        parse_formula(text)


def test_named_edge_and_unsupported_operators_parse():
    f = parse_formula(
        "forall-new [s:PatientSensor -e1:emits-> d:StringValue] implies "
        "exists [p:Pump] until[1,5] exists [c:Connector]"
    )
    assert isinstance(f.body, Until)
    assert f.pattern.variables["e1"].kind == "edge"
    assert f.pattern.connections[0].edge_var == "e1"

    g = parse_formula("eventually[0,9] exists [p:Pump] and exists [c:Connector] since[2,4] exists [q:Pump]")
    assert isinstance(g, And)
    assert isinstance(g.left, Eventually)
    assert isinstance(g.right, Since)


def test_once_semantics_suffixes():
    f = parse_formula("once-occurrence[0,60] exists [p:Pump]")
    assert isinstance(f, OncePast) and f.semantics == "occurrence"
    g = parse_formula("once-lifespan[0,60] exists [p:Pump]")
    assert g.semantics == "lifespan"
    assert parse_formula("once[0,60] exists [p:Pump]").semantics is None


def test_implies_is_right_associative_and_conj_binds_tighter():
    f = parse_formula("exists [a:Pump] and exists [b:Pump] implies exists [c:Pump]")
    assert isinstance(f, Implies)
    assert isinstance(f.left, And)


# -- round-trip property --------------------------------------------------------


class _Gen:
    NODE_TYPES = ("PatientSensor", "Pump", "Connector", "StringValue")
    EDGE_TYPES = ("emits", "takes", "links")

    def __init__(self, rng: Random, translatable: bool):
        self.rng = rng
        self.translatable = translatable
        self.counter = 0
        self.scope: list[str] = []

    def fresh(self) -> str:
        self.counter += 1
        return f"v{self.counter}"

    def pattern(self) -> Pattern:
        rng = self.rng
        variables: dict[str, Var] = {}
        declared: list[str] = []
        for _ in range(rng.randint(1, 3)):
            name = self.fresh()
            attrs = ()
            if rng.random() < 0.4:
                attrs = (
                    ("value", rng.choice(("op", "anti", rng.randint(0, 9))) ),
                )
            variables[name] = Var(name, "node", rng.choice(self.NODE_TYPES), attrs)
            declared.append(name)
        connections = []
        endpoints = declared + [v for v in self.scope if rng.random() < 0.5]
        for _ in range(rng.randint(0, 2)):
            src, tgt = rng.choice(endpoints), rng.choice(endpoints)
            if rng.random() < 0.2:
                connections.append(Connection(src, tgt, None))  # inferred
            elif rng.random() < 0.25:
                edge_var = self.fresh()
                edge_type = rng.choice(self.EDGE_TYPES)
                variables[edge_var] = Var(edge_var, "edge", edge_type)
                connections.append(Connection(src, tgt, edge_type, edge_var))
            else:
                connections.append(Connection(src, tgt, rng.choice(self.EDGE_TYPES)))
        self.scope.extend(declared)
        return Pattern(variables, tuple(connections))

    def atom(self):
        rng = self.rng
        negate = rng.random() < 0.3
        mark = len(self.scope)
        node = Exists(self.pattern())
        if negate:
            node = Not(node)
            del self.scope[mark:]  # negated-stage variables stay local
        if rng.random() < 0.4:
            lo = rng.randint(0, 50)
            hi = lo + rng.randint(0, 5000)
            semantics = rng.choice((None, "lifespan", "occurrence"))
            node = OncePast(lo, hi, node, semantics)
        return node

    def positive_atom(self):
        node = Exists(self.pattern())
        if self.rng.random() < 0.4:
            lo = self.rng.randint(0, 50)
            node = OncePast(lo, lo + self.rng.randint(0, 5000), node)
        return node

    def conj(self, n=None):
        n = n or self.rng.randint(1, 3)
        node = self.atom()
        for _ in range(n - 1):
            node = And(node, self.atom())
        return node

    def body(self, depth=0):
        if self.rng.random() < 0.35 and depth < 2:
            guard = self.positive_atom()
            if self.rng.random() < 0.3:
                guard = And(guard, self.positive_atom())
            return Implies(guard, self.body(depth + 1))
        return self.conj()

    def formula(self):
        if not self.translatable and self.rng.random() < 0.25:
            return self.body()
        trigger = self.pattern()
        return ForallNew(trigger, self.body())


def test_parse_print_round_trip_property():
    for seed in range(300):
        gen = _Gen(Random(seed), translatable=False)
        f = gen.formula()
        text = print_formula(f)
        reparsed = parse_formula(text)
        assert reparsed == f, f"seed {seed}: {text}"


def test_round_trip_covers_unsupported_operators():
    texts = [
        "exists [a:Pump] until[0,5] exists [b:Pump]",
        "exists [a:Pump] since[1,2] not exists [b:Pump]",
        "eventually[3,4] exists [a:Pump]",
    ]
    for text in texts:
        assert print_formula(parse_formula(text)) == text
