"""Event sequence files.

One event per line:

    <timestamp> CREATE_NODE <type> <name> [<attr>=<value> ...]
    <timestamp> CREATE_EDGE <type> <name> <src-name> <tgt-name>
    <timestamp> DELETE <name>

Timestamps are decimal integer seconds and must be non-decreasing. Lines
starting with `#` are comments. String attribute values are double-quoted
(`value="op"`); integers are bare (`level=3`). Names are symbolic; the
graph maps them to internal ids when events are applied.
"""

from __future__ import annotations

import re
from pathlib import Path
from typing import Iterable, TextIO

from .errors import EventFileError
from .model import ChangeEvent, CreateEdge, CreateNode, DeleteElement

_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_.\-]*$")
_ATTR_RE = re.compile(r'\s*([A-Za-z_][A-Za-z0-9_]*)=(?:"((?:[^"\\]|\\.)*)"|(-?\d+))(?=\s|$)')
_UNESCAPE_RE = re.compile(r"\\(.)")


def format_event(event: ChangeEvent) -> str:
    a = event.action
    if isinstance(a, CreateNode):
        parts = [str(event.timestamp), "CREATE_NODE", a.type_name, a.name]
        for key in a.attributes:
            value = a.attributes[key]
            if isinstance(value, str):
                escaped = value.replace("\\", "\\\\").replace('"', '\\"')
                parts.append(f'{key}="{escaped}"')
            else:
                parts.append(f"{key}={value}")
        return " ".join(parts)
    if isinstance(a, CreateEdge):
        return f"{event.timestamp} CREATE_EDGE {a.type_name} {a.name} {a.src} {a.tgt}"
    if isinstance(a, DeleteElement):
        return f"{event.timestamp} DELETE {a.name}"
    raise TypeError(f"unsupported action {a!r}")


def write_events(
    path: str | Path,
    events: Iterable[ChangeEvent],
    header_comments: Iterable[str] = (),
) -> int:
    """Write events to `path`; returns the number of events written."""
    count = 0
    last_ts = None
    with open(path, "w", encoding="utf-8") as fh:
        for comment in header_comments:
            fh.write(f"# {comment}\n")
        for event in events:
            if last_ts is not None and event.timestamp < last_ts:
                raise EventFileError(
                    f"event sequence regresses from {last_ts} to {event.timestamp}"
                )
            last_ts = event.timestamp
            fh.write(format_event(event))
            fh.write("\n")
            count += 1
    return count


def read_events(path: str | Path) -> list[ChangeEvent]:
    with open(path, "r", encoding="utf-8") as fh:
        return list(iter_events(fh))


def iter_events(fh: TextIO):
    last_ts = None
    for lineno, raw in enumerate(fh, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        event = _parse_line(line, lineno)
        if last_ts is not None and event.timestamp < last_ts:
            raise EventFileError(
                f"timestamp {event.timestamp} precedes {last_ts}", lineno
            )
        last_ts = event.timestamp
        yield event


def _parse_line(line: str, lineno: int) -> ChangeEvent:
    fields = line.split()
    if len(fields) < 3:
        raise EventFileError("expected '<timestamp> <op> ...'", lineno)
    try:
        ts = int(fields[0])
    except ValueError:
        raise EventFileError(f"bad timestamp {fields[0]!r}", lineno) from None
    if ts < 0:
        raise EventFileError(f"negative timestamp {ts}", lineno)
    op = fields[1]
    if op == "CREATE_NODE":
        head = line.split(maxsplit=4)
        if len(head) < 4:
            raise EventFileError("CREATE_NODE needs '<type> <name>'", lineno)
        _check_name(head[3], lineno)
        attrs: dict[str, str | int] = {}
        rest = head[4] if len(head) == 5 else ""
        pos = 0
        while pos < len(rest) and rest[pos:].strip():
            m = _ATTR_RE.match(rest, pos)
            if not m:
                raise EventFileError(f"bad attribute {rest[pos:].strip()!r}", lineno)
            key, quoted, bare = m.groups()
            if quoted is not None:
                attrs[key] = _UNESCAPE_RE.sub(r"\1", quoted)
            else:
                attrs[key] = int(bare)
            pos = m.end()
        return ChangeEvent(ts, CreateNode(head[2], head[3], attrs))
    if op == "CREATE_EDGE":
        if len(fields) != 6:
            raise EventFileError("CREATE_EDGE needs '<type> <name> <src> <tgt>'", lineno)
        for name in fields[3:6]:
            _check_name(name, lineno)
        return ChangeEvent(ts, CreateEdge(fields[2], fields[3], fields[4], fields[5]))
    if op == "DELETE":
        if len(fields) != 3:
            raise EventFileError("DELETE needs '<name>'", lineno)
        _check_name(fields[2], lineno)
        return ChangeEvent(ts, DeleteElement(fields[2]))
    raise EventFileError(f"unknown operation {op!r}", lineno)


def _check_name(name: str, lineno: int) -> None:
    if not _NAME_RE.match(name):
        raise EventFileError(f"bad element name {name!r}", lineno)
