"""A scripted single-inhabitant home with three activities over 24 hours.

Used by the end-to-end tests and ``scripts/make_synthetic_home.py``.
"""

from __future__ import annotations

import random
from datetime import datetime, timedelta
from zoneinfo import ZoneInfo

from .ingest import format_timestamp

TIMEZONE = "Europe/Rome"
DAY = datetime(2024, 3, 4, tzinfo=ZoneInfo(TIMEZONE))

HOME = {
    "home_id": "synthetic-1",
    "timezone": TIMEZONE,
    "rooms": ["bedroom", "kitchen", "living room", "hallway"],
    "activities": ["sleeping", "preparing meal", "watching TV"],
    "activity_merge": {"napping": "sleeping"},
    "activity_exclusions": ["toileting"],
    "sensors": [
        {"id": "bed", "room": "bedroom", "kind": "pressure", "state_property": "InBed",
         "element": "bed",
         "phrases": {"active": "the subject is already lying in bed",
                     "begin": "they lie down in bed", "end": "they get out of bed",
                     "inner": "they lie in bed for {duration}"}},
        {"id": "fridge", "room": "kitchen", "kind": "magnetic", "state_property": "FridgeDoorOpen",
         "element": "fridge door",
         "phrases": {"active": "the fridge door is already open",
                     "begin": "they open the fridge door", "end": "they close the fridge door"}},
        {"id": "cupboard", "room": "kitchen", "kind": "magnetic", "state_property": "CupboardOpen",
         "element": "kitchen cupboard",
         "phrases": {"active": "the kitchen cupboard is already open",
                     "begin": "they open the kitchen cupboard",
                     "end": "they close the kitchen cupboard"}},
        {"id": "stove", "room": "kitchen", "kind": "plug", "state_property": "StoveOn",
         "element": "stove", "threshold_watts": 50,
         "phrases": {"active": "the stove is already turned on",
                     "begin": "they turn on the stove", "end": "they turn off the stove",
                     "inner": "they turned on the stove and turned it off after {duration}"}},
        {"id": "couch", "room": "living room", "kind": "pressure", "state_property": "OnTheCouch",
         "element": "couch",
         "phrases": {"active": "the subject is already sitting on the couch",
                     "begin": "they sit on the couch", "end": "they get up from the couch",
                     "inner": "they sit on the couch for {duration}"}},
        {"id": "tv", "room": "living room", "kind": "plug", "state_property": "TvOn",
         "element": "television", "threshold_watts": 20,
         "phrases": {"active": "the TV is already on",
                     "begin": "they turn on the TV", "end": "they turn off the TV"}},
        {"id": "thermo", "room": "living room", "kind": "temperature",
         "state_property": "LivingRoomTemperature", "element": "living room thermometer",
         "ranges": [[-50, 19, "below 19 °C"], [19, 24, "19-24 °C"], [24, 30, "24-30 °C"],
                    [30, None, "above 30 °C"]],
         "phrases": {"active": "the living room temperature is {range}",
                     "begin": "the living room temperature becomes {range}",
                     "end": "the living room temperature leaves the {range} range"}},
        {"id": "hall_pir", "room": "hallway", "kind": "motion", "state_property": "InHallway",
         "element": "hallway",
         "phrases": {"active": "the subject is already moving in the hallway",
                     "begin": "they walk into the hallway", "end": "they leave the hallway",
                     "inner": "they walk through the hallway for {duration}"}},
    ],
}


def _at(hour: float) -> float:
    return (DAY + timedelta(hours=hour)).timestamp()


def generate(seed: int = 7) -> tuple[dict, str, str]:
    """Return ``(home_metadata_dict, events_csv, annotations_csv)``."""
    rng = random.Random(seed)
    zone = ZoneInfo(TIMEZONE)
    rows: list[tuple[float, str, str]] = []
    annotations: list[tuple[float, float, str]] = []

    def binary(sensor: str, start: float, end: float) -> None:
        rows.append((start, sensor, "ON"))
        rows.append((end, sensor, "OFF"))

    def power(sensor: str, start: float, end: float, on_watts: float) -> None:
        t = start - 30
        while t <= end + 30:
            watts = on_watts + rng.uniform(-5, 5) if start <= t <= end else rng.uniform(0, 3)
            rows.append((t, sensor, f"{watts:.1f}"))
            t += 10

    def hallway(t: float) -> None:
        binary("hall_pir", t, t + rng.uniform(4, 9))

    def sleep(h0: float, h1: float) -> None:
        start, end = _at(h0), _at(h1)
        annotations.append((start, end, "sleeping"))
        t = start
        while t < end:
            seg_end = min(end, t + rng.uniform(1.5, 3) * 3600)
            binary("bed", t + 5, seg_end - 5)
            t = seg_end

    def meal(h0: float, h1: float) -> None:
        start, end = _at(h0), _at(h1)
        annotations.append((start, end, "preparing meal"))
        hallway(start - 20)
        t = start + 30
        while t < end - 120:
            kind = rng.choice(["fridge", "cupboard", "fridge"])
            dur = rng.uniform(5, 25)
            binary(kind, t, t + dur)
            t += dur + rng.uniform(40, 200)
        power("stove", start + 300, min(end - 60, start + 300 + rng.uniform(600, 1200)), 800)

    def tv(h0: float, h1: float) -> None:
        start, end = _at(h0), _at(h1)
        annotations.append((start, end, "watching TV"))
        hallway(start - 15)
        binary("couch", start + 20, end - 20)
        power("tv", start + 40, end - 40, 90)

    sleep(0, 6.5)
    hallway(_at(6.6))
    meal(7.0, 7.5)
    tv(7.75, 9.0)
    meal(12.0, 12.75)
    tv(13.0, 14.0)
    meal(19.0, 19.75)
    tv(20.0, 22.5)
    hallway(_at(22.9))
    sleep(23.0, 23.999)
    # a label the home config drops
    annotations.append((_at(6.7), _at(6.8), "toileting"))

    for i in range(0, 24 * 4):
        hour = i / 4
        temp = 20 + 4 * (1 if 12 <= hour <= 17 else 0) + rng.uniform(-1.5, 1.5)
        rows.append((_at(hour), "thermo", f"{temp:.1f}"))

    rows.sort(key=lambda r: r[0])
    events = ["timestamp,sensor_id,value"]
    events += [f"{format_timestamp(t, zone)},{sid},{value}" for t, sid, value in rows]
    anns = ["start,end,label"]
    anns += [f"{format_timestamp(s, zone)},{format_timestamp(e, zone)},{label}"
             for s, e, label in sorted(annotations)]
    return HOME, "\n".join(events) + "\n", "\n".join(anns) + "\n"
