"""Readers for the canonical event, interval and annotation files."""

from __future__ import annotations

import csv
import io
import re
from collections import defaultdict
from datetime import datetime, timedelta, timezone
from typing import Iterable, Mapping, TextIO
from zoneinfo import ZoneInfo

from .errors import ParseError, RecordError, SchemaError
from .model import (
    ActivityAnnotation,
    Diagnostics,
    Edge,
    HomeMetadata,
    SensorEvent,
    SensorState,
)
from .state_gen import readings_to_events, state_sigma

EVENT_HEADER = ("timestamp", "sensor_id", "value")
INTERVAL_HEADER = ("start", "end", "sensor_id")
ANNOTATION_HEADER = ("start", "end", "label")

_FRACTION = re.compile(r"\.(\d+)")
_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)
_US = timedelta(microseconds=1)


def parse_timestamp(text: str, zone: ZoneInfo | None = None, line: int | None = None) -> float:
    """ISO-8601 to epoch seconds, exact to the microsecond.

    Naive timestamps are read in ``zone`` (UTC if not given).
    """
    text = text.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    # fromisoformat on 3.10 only takes 3- or 6-digit fractions
    text = _FRACTION.sub(lambda m: "." + (m.group(1) + "000000")[:6], text, count=1)
    try:
        dt = datetime.fromisoformat(text)
    except ValueError as exc:
        raise ParseError(f"bad timestamp {text!r}", line) from exc
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=zone or timezone.utc)
    return ((dt - _EPOCH) // _US) / 1e6


def format_timestamp(t: float, zone: ZoneInfo | None = None) -> str:
    dt = _EPOCH + timedelta(microseconds=round(t * 1e6))
    return dt.astimezone(zone or timezone.utc).isoformat()


def _rows(source: TextIO, header: tuple[str, ...]) -> Iterable[tuple[int, list[str]]]:
    reader = csv.reader(source)
    first = next(reader, None)
    if first is None:
        return
    if tuple(c.strip() for c in first) != header:
        raise ParseError(f"expected header {','.join(header)}, got {','.join(first)}", 1)
    for row in reader:
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} columns, got {len(row)}", reader.line_num)
        yield reader.line_num, [c.strip() for c in row]


def parse_event_stream(source: TextIO, meta: HomeMetadata) -> list[SensorEvent]:
    """Parse a ``timestamp,sensor_id,value`` file into a time-ordered event list.

    ON/OFF rows become events directly. Numeric rows are buffered per sensor
    and converted with the sensor's plug threshold or discretization ranges.
    Sorting is stable, so events sharing a timestamp keep their file order.
    """
    zone = meta.zone
    keyed: list[tuple[float, int, SensorEvent]] = []
    readings: dict[str, list[tuple[float, float, int]]] = defaultdict(list)
    for line, (ts, sid, value) in _rows(source, EVENT_HEADER):
        if not meta.has_sensor(sid):
            raise SchemaError(f"line {line}: unknown sensor_id {sid!r}")
        t = parse_timestamp(ts, zone, line)
        upper = value.upper()
        if upper in ("ON", "OFF"):
            keyed.append((t, line, SensorEvent(t, sid, Edge(upper))))
            continue
        try:
            number = float(value)
        except ValueError as exc:
            raise ParseError(f"value must be ON, OFF or a number, got {value!r}", line) from exc
        readings[sid].append((t, number, line))

    for sid, samples in readings.items():
        samples.sort(key=lambda s: (s[0], s[2]))
        first_line = {}
        for t, _, line in samples:
            first_line.setdefault(t, line)
        for ev in readings_to_events(sid, [(t, v) for t, v, _ in samples], meta):
            keyed.append((ev.t, first_line[ev.t], ev))

    keyed.sort(key=lambda k: (k[0], k[1]))
    return [ev for _, _, ev in keyed]


def write_event_stream(events: Iterable[SensorEvent], zone: ZoneInfo | None = None) -> str:
    """Serialize binary events back to the canonical file format."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(EVENT_HEADER)
    for ev in events:
        if ev.detail is not None:
            raise ValueError("discretized events have no canonical ON/OFF row form")
        writer.writerow([format_timestamp(ev.t, zone), ev.sensor_id, ev.edge.value])
    return buf.getvalue()


def parse_interval_records(
    source: TextIO,
    meta: HomeMetadata,
    *,
    diagnostics: Diagnostics | None = None,
) -> list[SensorState]:
    """Read pre-paired ``start,end,sensor_id`` rows (UCI-style logs).

    Overlapping records of the same sensor are all kept; each overlap is
    recorded in ``diagnostics`` under ``overlap``.
    """
    diag = diagnostics if diagnostics is not None else Diagnostics()
    zone = meta.zone
    states: list[tuple[float, int, SensorState]] = []
    for line, (start, end, sid) in _rows(source, INTERVAL_HEADER):
        if not meta.has_sensor(sid):
            raise SchemaError(f"line {line}: unknown sensor_id {sid!r}")
        t_s = parse_timestamp(start, zone, line)
        t_e = parse_timestamp(end, zone, line)
        if not t_s < t_e:
            raise RecordError(f"start {start} is not before end {end}", line)
        states.append((t_s, line, SensorState(state_sigma(meta, sid), sid, t_s, t_e)))
    states.sort(key=lambda k: (k[0], k[1]))
    out = [s for _, _, s in states]

    last_end: dict[str, tuple[float, float]] = {}
    for s in out:
        prev = last_end.get(s.sensor_id)
        if prev is not None and s.t_s < prev[1]:
            diag.add("overlap", f"{s.sensor_id}: [{s.t_s}, {s.t_e}] overlaps [{prev[0]}, {prev[1]}]")
        if prev is None or s.t_e > prev[1]:
            last_end[s.sensor_id] = (s.t_s, s.t_e)
    return out


def load_annotations(
    source: TextIO,
    meta: HomeMetadata,
    exclusions: Iterable[str] | None = None,
    *,
    merge: Mapping[str, str] | None = None,
) -> list[ActivityAnnotation]:
    """Read ``start,end,label`` ground truth.

    Labels are renamed through ``merge`` first (defaults to the home's
    ``activity_merge``), then excluded labels are dropped, then the rest must
    be one of the home's activities.
    """
    excluded = set(meta.activity_exclusions if exclusions is None else exclusions)
    merge = meta.activity_merge if merge is None else merge
    known = set(meta.activities)
    out: list[ActivityAnnotation] = []
    for line, (start, end, label) in _rows(source, ANNOTATION_HEADER):
        label = merge.get(label, label)
        if label in excluded:
            continue
        if label not in known:
            raise SchemaError(f"line {line}: unknown activity label {label!r}")
        t_s = parse_timestamp(start, meta.zone, line)
        t_e = parse_timestamp(end, meta.zone, line)
        if not t_s < t_e:
            raise RecordError(f"start {start} is not before end {end}", line)
        out.append(ActivityAnnotation(label, t_s, t_e))
    out.sort(key=lambda a: a.start)
    return out
