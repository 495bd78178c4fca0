"""Domain types shared across the pipeline: home metadata, events, states."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Mapping
from zoneinfo import ZoneInfo, ZoneInfoNotFoundError

import yaml

from .errors import ConfigurationError

log = logging.getLogger(__name__)


class SensorKind(str, Enum):
    MAGNETIC = "magnetic"
    MOTION = "motion"
    PRESSURE = "pressure"
    PLUG = "plug"
    TEMPERATURE = "temperature"
    PHONE = "phone"
    OTHER = "other"


class Edge(str, Enum):
    ON = "ON"
    OFF = "OFF"


@dataclass(frozen=True)
class PhraseTemplates:
    """Sentence fragments used by window2text for one sensor.

    ``active``: the state is already on when the window starts.
    ``begin`` / ``end``: the subject switches the state on / off.
    ``inner``: optional one-clause rendering of a state that starts and
    ends inside the window; defaults to "{begin}. After {duration}, {end}".

    Placeholders: ``{duration}``, ``{room}``, ``{range}``.
    """

    active: str
    begin: str
    end: str
    inner: str | None = None

    def __post_init__(self) -> None:
        for name in ("active", "begin", "end"):
            if not getattr(self, name).strip():
                raise ConfigurationError(f"phrase template {name!r} is empty")
        if self.inner is not None and not self.inner.strip():
            raise ConfigurationError("phrase template 'inner' is empty")


@dataclass(frozen=True)
class ValueRange:
    low: float
    high: float
    label: str

    def contains(self, value: float) -> bool:
        return self.low <= value < self.high


@dataclass(frozen=True)
class SensorMeta:
    sensor_id: str
    room: str
    kind: SensorKind
    state_property: str
    phrases: PhraseTemplates
    element: str | None = None
    threshold_watts: float | None = None
    ranges: tuple[ValueRange, ...] = ()

    def __post_init__(self) -> None:
        if not self.sensor_id:
            raise ConfigurationError("sensor without id")
        if not self.state_property:
            raise ConfigurationError(f"sensor {self.sensor_id!r}: empty state_property")
        if self.threshold_watts is not None and not self.threshold_watts > 0:
            raise ConfigurationError(f"sensor {self.sensor_id!r}: threshold must be > 0")
        if self.ranges:
            labels = [r.label for r in self.ranges]
            if len(set(labels)) != len(labels):
                raise ConfigurationError(f"sensor {self.sensor_id!r}: duplicate range labels")
            for r in self.ranges:
                if not r.low < r.high:
                    raise ConfigurationError(
                        f"sensor {self.sensor_id!r}: empty range {r.label!r}"
                    )
            for a, b in zip(self.ranges, self.ranges[1:]):
                if a.high != b.low:
                    raise ConfigurationError(
                        f"sensor {self.sensor_id!r}: ranges {a.label!r} and {b.label!r} "
                        "are not contiguous and non-overlapping"
                    )

    @property
    def continuous(self) -> bool:
        return self.threshold_watts is not None or bool(self.ranges)

    def describe(self) -> str:
        """Human-readable name of the household element the sensor observes."""
        if self.element:
            return self.element
        return _decamel(self.state_property)


def _decamel(name: str) -> str:
    out: list[str] = []
    for i, ch in enumerate(name):
        if ch.isupper() and i and not name[i - 1].isupper():
            out.append(" ")
        out.append(ch.lower())
    return "".join(out)


@dataclass(frozen=True)
class HomeMetadata:
    home_id: str
    rooms: tuple[str, ...]
    sensors: tuple[SensorMeta, ...]
    activities: tuple[str, ...]
    timezone: str = "UTC"
    activity_merge: Mapping[str, str] = field(default_factory=dict)
    activity_exclusions: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        if not self.activities:
            raise ConfigurationError("home declares no activities")
        if len(set(self.activities)) != len(self.activities):
            raise ConfigurationError("duplicate activity labels")
        seen: set[str] = set()
        for s in self.sensors:
            if s.sensor_id in seen:
                raise ConfigurationError(f"duplicate sensor id {s.sensor_id!r}")
            seen.add(s.sensor_id)
            if s.room not in self.rooms:
                raise ConfigurationError(
                    f"sensor {s.sensor_id!r} is in undeclared room {s.room!r}"
                )
        try:
            ZoneInfo(self.timezone)
        except (ZoneInfoNotFoundError, ValueError) as exc:
            raise ConfigurationError(f"unknown timezone {self.timezone!r}") from exc
        object.__setattr__(self, "_by_id", {s.sensor_id: s for s in self.sensors})

    @property
    def zone(self) -> ZoneInfo:
        return ZoneInfo(self.timezone)

    def sensor(self, sensor_id: str) -> SensorMeta:
        return self._by_id[sensor_id]  # type: ignore[attr-defined]

    def has_sensor(self, sensor_id: str) -> bool:
        return sensor_id in self._by_id  # type: ignore[attr-defined]

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> HomeMetadata:
        try:
            sensors = tuple(_sensor_from_dict(s) for s in doc.get("sensors", []))
            return cls(
                home_id=str(doc["home_id"]),
                rooms=tuple(doc["rooms"]),
                sensors=sensors,
                activities=tuple(doc["activities"]),
                timezone=doc.get("timezone", "UTC"),
                activity_merge=dict(doc.get("activity_merge", {}) or {}),
                activity_exclusions=frozenset(doc.get("activity_exclusions", []) or []),
            )
        except KeyError as exc:
            raise ConfigurationError(f"home metadata missing key {exc}") from exc

    def to_dict(self) -> dict[str, Any]:
        sensors = []
        for s in self.sensors:
            d: dict[str, Any] = {
                "id": s.sensor_id,
                "room": s.room,
                "kind": s.kind.value,
                "state_property": s.state_property,
                "phrases": {"active": s.phrases.active, "begin": s.phrases.begin,
                            "end": s.phrases.end},
            }
            if s.phrases.inner is not None:
                d["phrases"]["inner"] = s.phrases.inner
            if s.element:
                d["element"] = s.element
            if s.threshold_watts is not None:
                d["threshold_watts"] = s.threshold_watts
            if s.ranges:
                d["ranges"] = [[r.low, r.high, r.label] for r in s.ranges]
            sensors.append(d)
        return {
            "home_id": self.home_id,
            "rooms": list(self.rooms),
            "sensors": sensors,
            "activities": list(self.activities),
            "timezone": self.timezone,
            "activity_merge": dict(self.activity_merge),
            "activity_exclusions": sorted(self.activity_exclusions),
        }

    @classmethod
    def load(cls, path: str | Path) -> HomeMetadata:
        path = Path(path)
        text = path.read_text(encoding="utf-8")
        doc = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
        if not isinstance(doc, Mapping):
            raise ConfigurationError(f"{path}: home metadata must be a mapping")
        return cls.from_dict(doc)


def _sensor_from_dict(d: Mapping[str, Any]) -> SensorMeta:
    sid = d.get("id") or d.get("sensor_id")
    phrases = d.get("phrases")
    if not phrases:
        raise ConfigurationError(f"sensor {sid!r} has no phrase templates")
    try:
        templates = PhraseTemplates(
            active=phrases["active"], begin=phrases["begin"], end=phrases["end"],
            inner=phrases.get("inner"),
        )
    except KeyError as exc:
        raise ConfigurationError(f"sensor {sid!r}: missing phrase template {exc}") from exc
    ranges = tuple(
        ValueRange(float(lo), math.inf if hi is None else float(hi), str(label))
        for lo, hi, label in d.get("ranges", []) or []
    )
    try:
        kind = SensorKind(d.get("kind", "other"))
    except ValueError as exc:
        raise ConfigurationError(f"sensor {sid!r}: unknown kind {d.get('kind')!r}") from exc
    return SensorMeta(
        sensor_id=str(sid),
        room=d["room"],
        kind=kind,
        state_property=d["state_property"],
        phrases=templates,
        element=d.get("element"),
        threshold_watts=d.get("threshold_watts"),
        ranges=ranges,
    )


@dataclass(frozen=True)
class SensorEvent:
    t: float
    sensor_id: str
    edge: Edge
    # range label for discretized sensors; pairing keys on (sensor_id, detail)
    detail: str | None = None

    def __post_init__(self) -> None:
        if not math.isfinite(self.t):
            raise ValueError(f"non-finite event time {self.t!r}")


@dataclass(frozen=True)
class SensorState:
    sigma: str
    sensor_id: str
    t_s: float
    t_e: float
    truncated: bool = False
    detail: str | None = None

    def __post_init__(self) -> None:
        if not self.t_s < self.t_e:
            raise ValueError(f"state {self.sigma}: t_s={self.t_s} must precede t_e={self.t_e}")
        if not self.sigma:
            raise ValueError("state with empty sigma")

    @property
    def duration(self) -> float:
        return self.t_e - self.t_s


@dataclass(frozen=True)
class ActivityAnnotation:
    label: str
    start: float
    end: float

    def __post_init__(self) -> None:
        if not self.start < self.end:
            raise ValueError(f"annotation {self.label!r}: start must precede end")


@dataclass
class Diagnostics:
    """Collector for non-fatal anomalies found while reading raw logs."""

    entries: list[tuple[str, str]] = field(default_factory=list)

    def add(self, kind: str, message: str) -> None:
        log.debug("%s: %s", kind, message)
        self.entries.append((kind, message))

    def count(self, kind: str) -> int:
        return sum(1 for k, _ in self.entries if k == kind)

    def __len__(self) -> int:
        return len(self.entries)
