from __future__ import annotations

import pytest

from conftest import run_incremental
from intempo.errors import SchemaMismatchError
from intempo.matcher import (
    MatchVerdict,
    attach,
    binding_key,
    format_binding,
    parse_binding,
    read_verdicts,
    write_verdicts,
)
from intempo.model import (
    ChangeEvent,
    CreateEdge,
    CreateNode,
    DeleteElement,
    TemporalGraph,
)
from intempo.formula import parse_formula
from intempo.schema import NodeTypeDecl, TypeSchema
from intempo.simulator import ANTIBIOTIC_RULE
from intempo.translate import translate


def topology_events():
    return [
        ChangeEvent(0, CreateNode("PatientSensor", "s1")),
        ChangeEvent(0, CreateNode("Pump", "p1")),
        ChangeEvent(0, CreateNode("Connector", "c1")),
        ChangeEvent(0, CreateEdge("links", "cs1", "c1", "s1")),
        ChangeEvent(0, CreateEdge("links", "cp1", "c1", "p1")),
    ]


def reaction_at(ts, n="r1"):
    return [
        ChangeEvent(ts, CreateNode("StringValue", n, {"value": "anti"})),
        ChangeEvent(ts, CreateEdge("takes", f"e{n}", "p1", n)),
    ]


def datum_at(ts, value="op", n="d1", sensor="s1"):
    return [
        ChangeEvent(ts, CreateNode("StringValue", n, {"value": value})),
        ChangeEvent(ts, CreateEdge("emits", f"e{n}", sensor, n)),
    ]


@pytest.fixture()
def query(schema):
    return translate(parse_formula(ANTIBIOTIC_RULE), schema=schema)


@pytest.fixture()
def occurrence_query(schema):
    return translate(parse_formula(ANTIBIOTIC_RULE), schema=schema, semantics="occurrence")


def test_satisfied_within_window(schema, query):
    # reaction at 100, trigger at 200: 100 < 200 and INFINITY > 200 - 3600
    events = topology_events() + reaction_at(100) + datum_at(200)
    verdicts = run_incremental(query, events, schema)
    assert [v.status for v in verdicts] == ["SATISFIED"]
    v = verdicts[0]
    assert v.trigger_time == 200
    assert set(v.trigger_binding) == {"sensor", "datum"}
    assert set(v.witness) == {"pump", "reac", "connector"}


def test_occurrence_semantics_expires_old_reaction(schema, occurrence_query):
    # reaction cts=100 is outside [5000-3600, 5000]
    events = topology_events() + reaction_at(100) + datum_at(5000)
    verdicts = run_incremental(occurrence_query, events, schema)
    assert [(v.trigger_time, v.status) for v in verdicts] == [(5000, "VIOLATED")]


def test_structural_miss_when_pump_not_connected(schema, query):
    # sensor without any connector/pump: body stage misses structurally
    events = [
        ChangeEvent(0, CreateNode("PatientSensor", "s1")),
        ChangeEvent(0, CreateNode("Pump", "p1")),
    ] + reaction_at(100) + datum_at(200)
    verdicts = run_incremental(query, events, schema)
    assert [v.status for v in verdicts] == ["VIOLATED"]


def test_noise_datum_yields_no_verdict(schema, query):
    events = topology_events() + reaction_at(100) + datum_at(200, value="noise")
    assert run_incremental(query, events, schema) == []


def test_monitor_on_empty_graph_stays_silent(schema, query):
    graph = TemporalGraph(schema)
    monitor = attach(query, graph)
    assert monitor.flush() == []
    assert monitor.drain() == []


def test_two_monitors_emit_identical_streams(schema, query):
    graph = TemporalGraph(schema)
    m1 = attach(query, graph)
    m2 = attach(query, graph)
    for event in topology_events() + reaction_at(100) + datum_at(200) + datum_at(300, n="d2"):
        graph.apply_event(event)
    m1.flush(), m2.flush()
    a = [(v.trigger_time, binding_key(v.trigger_binding), v.status) for v in m1.drain()]
    b = [(v.trigger_time, binding_key(v.trigger_binding), v.status) for v in m2.drain()]
    assert a == b and len(a) == 2


def test_trigger_binding_reported_once(schema, query):
    graph = TemporalGraph(schema)
    monitor = attach(query, graph)
    for event in topology_events() + reaction_at(100) + datum_at(200):
        graph.apply_event(event)
    # a second emits edge between the same sensor and datum does not re-report
    graph.apply_event(ChangeEvent(250, CreateEdge("emits", "dup", "s1", "d1")))
    monitor.flush()
    assert len(monitor.drain()) == 1


def test_verdicts_monotone_in_trigger_time(schema, query):
    events = topology_events() + reaction_at(50)
    for i, ts in enumerate((100, 100, 400, 900)):
        events += datum_at(ts, n=f"d{i}")
    verdicts = run_incremental(query, events, schema)
    times = [v.trigger_time for v in verdicts]
    assert times == sorted(times)
    assert len(verdicts) == 4


def test_same_timestamp_trigger_and_witness(schema, query, occurrence_query):
    # trigger and reaction share one timestamp: the strict lifespan bound
    # excludes the same-instant reaction, the occurrence window includes it
    events = topology_events() + reaction_at(200) + datum_at(200)
    lifespan = run_incremental(query, events, schema)
    assert [v.status for v in lifespan] == ["VIOLATED"]
    occurrence = run_incremental(occurrence_query, events, schema)
    assert [v.status for v in occurrence] == ["SATISFIED"]


def test_deleted_elements_still_match_history(schema, query):
    # matching runs over history; only kappa inspects timestamps, and the
    # lifespan window tolerates a deletion inside it
    events = (
        topology_events()
        + reaction_at(100)
        + [ChangeEvent(150, DeleteElement("r1"))]
        + datum_at(200)
    )
    verdicts = run_incremental(query, events, schema)
    assert [v.status for v in verdicts] == ["SATISFIED"]


def test_deleted_reaction_outside_window_violates(schema, query):
    events = (
        topology_events()
        + reaction_at(100)
        + [ChangeEvent(150, DeleteElement("r1"))]
        + datum_at(9000)  # dts=150 <= 9000-3600
    )
    verdicts = run_incremental(query, events, schema)
    assert [v.status for v in verdicts] == ["VIOLATED"]


def test_attach_rejects_foreign_schema(query):
    other = TypeSchema.build([NodeTypeDecl("Thing")], [])
    graph = TemporalGraph(other)
    fresh = translate(parse_formula(ANTIBIOTIC_RULE))  # unresolved
    with pytest.raises(SchemaMismatchError):
        attach(fresh, graph)


def test_detach_stops_monitoring(schema, query):
    graph = TemporalGraph(schema)
    monitor = attach(query, graph)
    for event in topology_events() + reaction_at(100) + datum_at(200):
        graph.apply_event(event)
    monitor.flush()
    assert len(monitor.drain()) == 1
    monitor.detach()
    for event in datum_at(300, n="d2"):
        graph.apply_event(event)
    monitor.flush()
    assert monitor.drain() == []


def test_named_edge_variable_binds_and_constrains(schema):
    text = (
        "forall-new [s:PatientSensor] implies "
        'once[0,100] exists [s -e1:emits-> d:StringValue{value="op"}]'
    )
    query = translate(parse_formula(text), schema=schema)
    # edge created at 50, new sensor trigger... sensors are created first, so
    # trigger on a second sensor created later via links is not possible;
    # instead trigger on a fresh sensor and let the datum attach to it.
    events = [
        ChangeEvent(0, CreateNode("PatientSensor", "s1")),
        ChangeEvent(10, CreateNode("StringValue", "d1", {"value": "op"})),
        ChangeEvent(10, CreateEdge("emits", "e_d1", "s1", "d1")),
        ChangeEvent(20, CreateNode("PatientSensor", "s2")),
    ]
    verdicts = run_incremental(query, events, schema)
    by_time = {v.trigger_time: v for v in verdicts}
    assert by_time[0].status == "VIOLATED"  # nothing emitted yet
    assert by_time[20].status == "VIOLATED"  # s2 emitted nothing
    # the sensor trigger at t=0 cannot see the later edge; d1's own edge
    # creation does not trigger (sensors are the only trigger type here)
    assert set(by_time) == {0, 20}


def test_nac_rule(schema):
    text = "forall-new [p:Pump] implies not exists [c:Connector, c ~> p]"
    query = translate(parse_formula(text), schema=schema)
    events = [
        ChangeEvent(0, CreateNode("Pump", "lonely")),
        ChangeEvent(5, CreateNode("Connector", "c1")),
        ChangeEvent(6, CreateNode("Pump", "wired")),
        ChangeEvent(6, CreateEdge("links", "l1", "c1", "wired")),
    ]
    verdicts = run_incremental(query, events, schema)
    status = {v.trigger_time: v.status for v in verdicts}
    assert status == {0: "SATISFIED", 6: "VIOLATED"}


def test_verdict_csv_round_trip(tmp_path, schema, query):
    events = topology_events() + reaction_at(100) + datum_at(200) + datum_at(5000, n="d2")
    verdicts = run_incremental(query, events, schema)
    path = tmp_path / "verdicts.csv"
    write_verdicts(path, verdicts)
    loaded = read_verdicts(path)
    assert [v.key() for v in loaded] == [v.key() for v in verdicts]
    header = path.read_text().splitlines()[0]
    assert header == "trigger_time,status,trigger_binding,witness_binding"


def test_binding_format_round_trip():
    binding = {"sensor": 3, "datum": 11}
    assert parse_binding(format_binding(binding)) == binding
    assert format_binding(None) == ""
    assert parse_binding("") == {}
