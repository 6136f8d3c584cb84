"""Seeded random event traces for property tests.

Two flavors: `random_trace` produces arbitrary schema-valid sequences over
the healthcare schema (creations, deletions, edges attached to old nodes,
plenty of equal-timestamp ties); `small_workload` produces miniature
sensor/pump workloads through the production generator.
"""

from __future__ import annotations

from random import Random

from intempo.model import ChangeEvent, CreateEdge, CreateNode, DeleteElement
from intempo.simulator import SimConfig, generate

VALUES = ("op", "noise", "anti")


class _State:
    def __init__(self):
        self.counter = 0
        self.live = {
            "PatientSensor": [],
            "Pump": [],
            "Connector": [],
            "StringValue": [],
        }
        self.live_edges = []  # (edge name, src name, tgt name)

    def fresh(self, prefix):
        self.counter += 1
        return f"{prefix}{self.counter}"

    def add_edge(self, name, src, tgt):
        self.live_edges.append((name, src, tgt))

    def delete_node(self, name):
        self.live_edges = [e for e in self.live_edges if name not in (e[1], e[2])]


def random_trace(seed: int, n_events: int = 120, max_step: int = 40) -> list[ChangeEvent]:
    rng = Random(seed)
    state = _State()
    events: list[ChangeEvent] = []
    ts = 1

    def pick(kind):
        names = state.live[kind]
        return rng.choice(names) if names else None

    for _ in range(n_events):
        if rng.random() < 0.55:
            ts += rng.choice((0, 0, 1, rng.randint(1, max_step)))
        op = rng.random()
        if op < 0.12:
            kind = rng.choice(("PatientSensor", "Pump", "Connector"))
            name = state.fresh(kind[0].lower())
            state.live[kind].append(name)
            events.append(ChangeEvent(ts, CreateNode(kind, name)))
        elif op < 0.45:
            name = state.fresh("v")
            value = rng.choice(VALUES)
            state.live["StringValue"].append(name)
            events.append(ChangeEvent(ts, CreateNode("StringValue", name, {"value": value})))
            # usually attach immediately, like a monitored value would be
            if rng.random() < 0.85:
                if rng.random() < 0.5:
                    owner, etype = pick("PatientSensor"), "emits"
                else:
                    owner, etype = pick("Pump"), "takes"
                if owner is not None:
                    ename = state.fresh("e")
                    state.add_edge(ename, owner, name)
                    events.append(ChangeEvent(ts, CreateEdge(etype, ename, owner, name)))
        elif op < 0.62:
            # edge to an arbitrary live value node (possibly an old one)
            value_node = pick("StringValue")
            if value_node is None:
                continue
            if rng.random() < 0.5:
                owner, etype = pick("PatientSensor"), "emits"
            else:
                owner, etype = pick("Pump"), "takes"
            if owner is None:
                continue
            ename = state.fresh("e")
            state.add_edge(ename, owner, value_node)
            events.append(ChangeEvent(ts, CreateEdge(etype, ename, owner, value_node)))
        elif op < 0.78:
            connector = pick("Connector")
            entity = pick(rng.choice(("PatientSensor", "Pump")))
            if connector is None or entity is None:
                continue
            ename = state.fresh("e")
            state.add_edge(ename, connector, entity)
            events.append(ChangeEvent(ts, CreateEdge("links", ename, connector, entity)))
        elif op < 0.9 and state.live_edges:
            ename, _, _ = state.live_edges.pop(rng.randrange(len(state.live_edges)))
            events.append(ChangeEvent(ts, DeleteElement(ename)))
        else:
            kinds = [k for k, names in state.live.items() if names]
            if not kinds:
                continue
            kind = rng.choice(kinds)
            name = state.live[kind].pop(rng.randrange(len(state.live[kind])))
            state.delete_node(name)
            events.append(ChangeEvent(ts, DeleteElement(name)))
    return events


def small_workload(seed: int, sensors=2, datums=30, reactions=60, horizon=5000):
    config = SimConfig(
        num_sensors=sensors,
        datum_events_per_sensor=datums,
        reaction_events_per_pump=reactions,
        horizon=horizon,
        seed=seed,
    )
    return generate(config).all_events
