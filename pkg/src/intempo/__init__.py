"""intempo: a history-aware typed attributed graph engine with incremental
checking of metric temporal rules and retention-window pruning."""

from .bench import RunConfig, RunResult, compare_verdicts, run
from .errors import IntempoError
from .events_io import read_events, write_events
from .formula import parse_formula, print_formula
from .matcher import MatchVerdict, Monitor, attach, read_verdicts, write_verdicts
from .model import (
    INFINITY,
    ChangeEvent,
    CreateEdge,
    CreateNode,
    DeleteElement,
    Delta,
    ModelElement,
    TemporalGraph,
    Timepoint,
    apply_event,
    elements_of_type,
    subscribe_creation,
)
from .oracle import oracle_eval
from .pruner import PruneReport, PruningRule, derive_rules, prune
from .schema import EdgeTypeDecl, NodeTypeDecl, TypeSchema
from .simulator import ANTIBIOTIC_RULE, SimConfig, SimResult, generate, shs_schema
from .translate import (
    LIFESPAN,
    OCCURRENCE,
    SATISFIED,
    VIOLATED,
    StructuralQuery,
    derive_trigger_types,
    translate,
)

__version__ = "0.1.0"

__all__ = [
    "ANTIBIOTIC_RULE",
    "ChangeEvent",
    "CreateEdge",
    "CreateNode",
    "DeleteElement",
    "Delta",
    "EdgeTypeDecl",
    "INFINITY",
    "IntempoError",
    "LIFESPAN",
    "MatchVerdict",
    "ModelElement",
    "Monitor",
    "NodeTypeDecl",
    "OCCURRENCE",
    "PruneReport",
    "PruningRule",
    "RunConfig",
    "RunResult",
    "SATISFIED",
    "SimConfig",
    "SimResult",
    "StructuralQuery",
    "TemporalGraph",
    "Timepoint",
    "TypeSchema",
    "VIOLATED",
    "apply_event",
    "attach",
    "compare_verdicts",
    "derive_rules",
    "derive_trigger_types",
    "elements_of_type",
    "generate",
    "oracle_eval",
    "parse_formula",
    "print_formula",
    "prune",
    "read_events",
    "read_verdicts",
    "run",
    "shs_schema",
    "subscribe_creation",
    "translate",
    "write_events",
    "write_verdicts",
]
