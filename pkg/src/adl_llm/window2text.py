"""Natural-language rendering of a categorized window.

The description is built in four parts: window length and time of day, where
the subject starts, what is already active, then a per-room narration of what
happens inside the window, rooms in order of first state onset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime, timezone
from zoneinfo import ZoneInfo

from .errors import ConfigurationError
from .model import HomeMetadata, SensorKind, SensorMeta, SensorState
from .segmentation import Category, Window

# (start hour inclusive, label); "night" wraps around midnight
TIME_OF_DAY = (
    (5, "early morning"),
    (8, "morning"),
    (11, "noon"),
    (14, "afternoon"),
    (18, "evening"),
    (23, "night"),
)

AMBIENT_KINDS = frozenset({SensorKind.TEMPERATURE})

_TOD_PHRASE = {
    "early morning": "in the early morning",
    "morning": "in the morning",
    "noon": "around noon",
    "afternoon": "in the afternoon",
    "evening": "in the evening",
    "night": "at night",
}


@dataclass(frozen=True)
class WindowText:
    text: str
    window_start: float
    rooms_visited: tuple[str, ...]


def time_of_day_phrase(t: float, zone: ZoneInfo | str | None = None) -> str:
    if isinstance(zone, str):
        zone = ZoneInfo(zone)
    local = datetime.fromtimestamp(t, tz=zone or timezone.utc)
    hour = local.hour + local.minute / 60 + local.second / 3600
    label = "night"
    for start, name in TIME_OF_DAY:
        if hour >= start:
            label = name
    return label


def _round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def duration_phrase(seconds: float) -> str:
    if seconds < 0:
        raise ValueError(f"negative duration {seconds}")
    n = _round_half_up(seconds)
    if n >= 120:
        m = _round_half_up(seconds / 60)
        return f"{m} minutes"
    return "1 second" if n == 1 else f"{n} seconds"


def _cap(s: str) -> str:
    return s[:1].upper() + s[1:]


def _fill(template: str, sensor: SensorMeta, state: SensorState, seconds: float | None = None) -> str:
    try:
        return template.format(
            duration=duration_phrase(seconds) if seconds is not None else "",
            room=sensor.room,
            range=state.detail or "",
        ).strip().rstrip(".")
    except (KeyError, IndexError) as exc:
        raise ConfigurationError(
            f"sensor {sensor.sensor_id!r}: bad placeholder in template {template!r}"
        ) from exc


def _inner_clause(sensor: SensorMeta, state: SensorState) -> str:
    p = sensor.phrases
    if p.inner is not None:
        return _fill(p.inner, sensor, state, state.duration)
    begin = _fill(p.begin, sensor, state)
    end = _fill(p.end, sensor, state)
    return f"{begin}. After {duration_phrase(state.duration)}, {end}"


def render(window: Window, meta: HomeMetadata) -> WindowText:
    opening = (
        f"This window lasts {duration_phrase(window.tau)} and takes place "
        f"{_TOD_PHRASE[time_of_day_phrase(window.t, meta.zone)]}."
    )
    if window.empty:
        return WindowText(
            f"{opening} During these {duration_phrase(window.tau)}, "
            "no sensor activity was observed.",
            window.t, (),
        )

    def sensor_of(state: SensorState) -> SensorMeta:
        if not meta.has_sensor(state.sensor_id):
            raise ConfigurationError(f"sensor {state.sensor_id!r} missing from home metadata")
        return meta.sensor(state.sensor_id)

    entries = sorted(window.states, key=lambda sc: (sc[0].t_s, sc[0].sensor_id, sc[0].detail or ""))

    # ambient sensors say nothing about where the subject is
    located = [(s, c) for s, c in entries if sensor_of(s).kind not in AMBIENT_KINDS]
    rooms: list[str] = []
    for state, _ in located:
        room = sensor_of(state).room
        if room not in rooms:
            rooms.append(room)

    sentences = [opening]
    already = [(s, c) for s, c in entries if c.already_active]
    start_room = None
    if located:
        located_already = [(s, c) for s, c in located if c.already_active]
        start_room = sensor_of((located_already or located)[0][0]).room
        sentences.append(f"The subject is in the {start_room}.")

    if already:
        clauses = [_fill(sensor_of(s).phrases.active, sensor_of(s), s) for s, _ in already]
        if len(clauses) == 1:
            joined = clauses[0]
        else:
            joined = ", ".join(clauses[:-1]) + " and " + clauses[-1]
        sentences.append(_cap(joined) + ".")

    # narration items: (time, sensor_id, kind, text)
    by_room: dict[str, list[tuple[float, str, str, str]]] = {r: [] for r in rooms}
    ambient: list[tuple[float, str, str, str]] = []
    for state, cat in entries:
        sensor = sensor_of(state)
        if cat is Category.INNER:
            item = (state.t_s, state.sensor_id, "inner", _inner_clause(sensor, state))
        elif cat is Category.PERSISTENT:
            item = (state.t_s, state.sensor_id, "begin", _fill(sensor.phrases.begin, sensor, state))
        elif cat is Category.ALREADY_ACTIVE:
            end = _fill(sensor.phrases.end, sensor, state)
            item = (state.t_e, state.sensor_id, "end",
                    f"After {duration_phrase(state.t_e - window.t)}, {end}")
        else:
            continue
        if sensor.kind in AMBIENT_KINDS:
            ambient.append(item)
        else:
            by_room[sensor.room].append(item)

    current = start_room
    for room in rooms:
        items = sorted(by_room[room], key=lambda i: (i[0], i[1]))
        if not items:
            continue
        if room != current:
            sentences.append(f"Then, they move to the {room}.")
            current = room
        for idx, (_, _, kind, text) in enumerate(items):
            if kind == "end":
                sentences.append(text + ".")
            elif idx == 0:
                sentences.append(f"Here, {text}.")
            else:
                sentences.append(f"Then, {text}.")
    for _, _, _, text in sorted(ambient, key=lambda i: (i[0], i[1])):
        sentences.append(f"Meanwhile, {text[:1].lower()}{text[1:]}.")
    return WindowText(" ".join(sentences), window.t, tuple(rooms))
