"""Smart-healthcare workload: schema, monitored rule, and event generator.

The generated scenario models patient sensors that emit string-valued
measurements and smart pumps that record string-valued reactions. Every
sensor is wired to one pump through a connector at time zero. After that,
each logical event creates one value node plus the edge attaching it to
its owner: sensor datums carry value "op" (a procedure) or "noise", pump
reactions carry value "anti" (an antibiotic administration). Timestamps
are drawn uniformly over [1, horizon] from a seeded Mersenne Twister
generator and sorted, so the event rate is near constant and the same
seed always reproduces the same sequence byte for byte.

The monitored rule: whenever a sensor emits an "op" datum, a pump
connected to that sensor must have recorded an "anti" reaction within the
previous hour.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from random import Random

from .errors import InvalidConfigError
from .model import ChangeEvent, CreateEdge, CreateNode
from .schema import EdgeTypeDecl, NodeTypeDecl, TypeSchema

SECONDS_PER_MONTH = 30 * 24 * 3600  # 2,592,000

RNG_ALGORITHM = "mt19937"

ANTIBIOTIC_RULE = (
    'forall-new [sensor:PatientSensor -emits-> datum:StringValue{value="op"}] '
    "implies once[0,3600] exists "
    '[pump:Pump -takes-> reac:StringValue{value="anti"}, '
    "connector:Connector(pump, sensor)]"
)


def shs_schema() -> TypeSchema:
    return TypeSchema.build(
        node_types=[
            NodeTypeDecl("AbstractMonitoringResult"),
            NodeTypeDecl("AbstractEntity", supertypes=("AbstractMonitoringResult",)),
            NodeTypeDecl("PatientSensor", supertypes=("AbstractEntity",)),
            NodeTypeDecl("Pump", supertypes=("AbstractEntity",)),
            NodeTypeDecl(
                "StringValue",
                attributes=(("value", "string"),),
                supertypes=("AbstractMonitoringResult",),
            ),
            NodeTypeDecl("Connector", supertypes=("AbstractMonitoringResult",)),
        ],
        edge_types=[
            EdgeTypeDecl("emits", "PatientSensor", "StringValue"),
            EdgeTypeDecl("takes", "Pump", "StringValue"),
            EdgeTypeDecl("links", "Connector", "AbstractEntity"),
        ],
    )


@dataclass
class SimConfig:
    num_sensors: int = 10
    datum_events_per_sensor: int = 10_000
    reaction_events_per_pump: int = 30_000
    op_probability: float = 0.5
    horizon: int = SECONDS_PER_MONTH
    loop_interval: int = 3600
    seed: int = 0

    def validate(self) -> None:
        if self.num_sensors < 0:
            raise InvalidConfigError("num_sensors must be >= 0")
        if self.datum_events_per_sensor < 0 or self.reaction_events_per_pump < 0:
            raise InvalidConfigError("event counts must be >= 0")
        if not 0.0 <= self.op_probability <= 1.0:
            raise InvalidConfigError("op_probability must be within [0, 1]")
        if self.horizon < 1:
            raise InvalidConfigError("horizon must be >= 1 second")
        if self.loop_interval < 1:
            raise InvalidConfigError("loop_interval must be >= 1 second")

    @property
    def num_pumps(self) -> int:
        return self.num_sensors

    @property
    def logical_event_count(self) -> int:
        return (
            self.num_sensors * self.datum_events_per_sensor
            + self.num_pumps * self.reaction_events_per_pump
        )

    def header_comments(self) -> list[str]:
        return [
            "intempo events v1",
            f"rng={RNG_ALGORITHM} seed={self.seed}",
            (
                f"sensors={self.num_sensors} "
                f"datums-per-sensor={self.datum_events_per_sensor} "
                f"reactions-per-pump={self.reaction_events_per_pump} "
                f"op-probability={self.op_probability} "
                f"horizon={self.horizon} loop-interval={self.loop_interval}"
            ),
        ]


@dataclass
class SimResult:
    initial_events: list[ChangeEvent]
    events: list[ChangeEvent]

    @property
    def all_events(self) -> list[ChangeEvent]:
        return self.initial_events + self.events

    @property
    def logical_event_count(self) -> int:
        return len(self.events) // 2


# Value nodes reuse three shared attribute dicts; attributes are immutable
# so sharing is safe and keeps large runs compact.
_OP_ATTRS = {"value": sys.intern("op")}
_NOISE_ATTRS = {"value": sys.intern("noise")}
_ANTI_ATTRS = {"value": sys.intern("anti")}


def generate(config: SimConfig) -> SimResult:
    """Deterministic workload for a config: the time-zero topology plus the
    sorted, timestamped datum/reaction sequence."""
    config.validate()
    rng = Random(config.seed)

    initial: list[ChangeEvent] = []
    for i in range(config.num_sensors):
        initial.append(ChangeEvent(0, CreateNode("PatientSensor", f"s{i}")))
        initial.append(ChangeEvent(0, CreateNode("Pump", f"p{i}")))
        initial.append(ChangeEvent(0, CreateNode("Connector", f"c{i}")))
        initial.append(ChangeEvent(0, CreateEdge("links", f"cs{i}", f"c{i}", f"s{i}")))
        initial.append(ChangeEvent(0, CreateEdge("links", f"cp{i}", f"c{i}", f"p{i}")))

    # (timestamp, construction order, owner index, is datum, attrs)
    drafts: list[tuple[int, int, int, bool, dict]] = []
    order = 0
    for i in range(config.num_sensors):
        for _ in range(config.datum_events_per_sensor):
            ts = rng.randint(1, config.horizon)
            attrs = _OP_ATTRS if rng.random() < config.op_probability else _NOISE_ATTRS
            drafts.append((ts, order, i, True, attrs))
            order += 1
    for i in range(config.num_pumps):
        for _ in range(config.reaction_events_per_pump):
            ts = rng.randint(1, config.horizon)
            drafts.append((ts, order, i, False, _ANTI_ATTRS))
            order += 1
    drafts.sort(key=lambda item: (item[0], item[1]))

    events: list[ChangeEvent] = []
    datum_n = 0
    reaction_n = 0
    for ts, _, owner, is_datum, attrs in drafts:
        if is_datum:
            name = f"d{datum_n}"
            datum_n += 1
            events.append(ChangeEvent(ts, CreateNode("StringValue", name, attrs)))
            events.append(
                ChangeEvent(ts, CreateEdge("emits", f"e_{name}", f"s{owner}", name))
            )
        else:
            name = f"r{reaction_n}"
            reaction_n += 1
            events.append(ChangeEvent(ts, CreateNode("StringValue", name, attrs)))
            events.append(
                ChangeEvent(ts, CreateEdge("takes", f"e_{name}", f"p{owner}", name))
            )
    return SimResult(initial, events)
