from __future__ import annotations

import pytest

from intempo.matcher import attach
from intempo.model import TemporalGraph
from intempo.simulator import ANTIBIOTIC_RULE, shs_schema


@pytest.fixture(scope="session")
def schema():
    return shs_schema()


@pytest.fixture()
def graph(schema):
    return TemporalGraph(schema)


@pytest.fixture(scope="session")
def rule_text():
    return ANTIBIOTIC_RULE


def run_incremental(query, events, schema):
    """Drive a fresh graph + monitor over the events; return all verdicts."""
    graph = TemporalGraph(schema)
    monitor = attach(query, graph)
    for event in events:
        graph.apply_event(event)
    monitor.flush()
    return monitor.drain()
