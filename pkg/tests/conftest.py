from __future__ import annotations

import sys
from pathlib import Path

import pytest
import yaml

from adl_llm import synthetic
from adl_llm.model import HomeMetadata

GOLDEN = Path(__file__).parent / "golden"

KITCHEN_HOME = {
    "home_id": "test-home",
    "timezone": "UTC",
    "rooms": ["kitchen", "living room", "bathroom"],
    "activities": ["preparing lunch", "snacking", "relaxing on couch", "phone call"],
    "activity_merge": {"making phone call": "phone call", "answering phone": "phone call"},
    "activity_exclusions": ["toileting"],
    "sensors": [
        {"id": "fridge", "room": "kitchen", "kind": "magnetic",
         "state_property": "FridgeDoorOpen", "element": "fridge door",
         "phrases": {"active": "the fridge door is already open",
                     "begin": "they open the fridge door",
                     "end": "they close the fridge door"}},
        {"id": "near_stove", "room": "kitchen", "kind": "motion",
         "state_property": "NearStove", "element": "stove area",
         "phrases": {"active": "they are already near the stove",
                     "begin": "they move near the stove",
                     "end": "they step away from the stove",
                     "inner": "they are near the stove for {duration}"}},
        {"id": "stove", "room": "kitchen", "kind": "plug", "state_property": "StoveON",
         "element": "stove", "threshold_watts": 50,
         "phrases": {"active": "the stove is already turned on",
                     "begin": "the subject turned on the stove",
                     "end": "the subject turned off the stove",
                     "inner": "the subject turned on the stove and turned it off after {duration}"}},
        {"id": "couch", "room": "living room", "kind": "pressure",
         "state_property": "OnTheCouch", "element": "couch",
         "phrases": {"active": "the subject is already sitting on the couch",
                     "begin": "they sit on the couch",
                     "end": "they get up from the couch"}},
        {"id": "sink", "room": "bathroom", "kind": "motion",
         "state_property": "NearBathroomSink", "element": "bathroom sink",
         "phrases": {"active": "the subject is already near the sink",
                     "begin": "they approach the sink", "end": "they leave the sink",
                     "inner": "the subject was near the sink for {duration}"}},
        {"id": "thermo", "room": "living room", "kind": "temperature",
         "state_property": "Temperature",
         "ranges": [[15, 19, "15-18C"], [19, 24, "19-24C"], [24, 30, "24-30C"],
                    [30, None, ">30C"]],
         "phrases": {"active": "the temperature is {range}",
                     "begin": "the temperature becomes {range}",
                     "end": "the temperature leaves {range}"}},
    ],
}


@pytest.fixture
def meta() -> HomeMetadata:
    return HomeMetadata.from_dict(KITCHEN_HOME)


@pytest.fixture(scope="session")
def synthetic_home(tmp_path_factory) -> dict[str, Path]:
    root = tmp_path_factory.mktemp("synthetic")
    home, events, annotations = synthetic.generate(seed=7)
    paths = {
        "home": root / "home.yaml",
        "events": root / "events.csv",
        "annotations": root / "annotations.csv",
        "root": root,
    }
    paths["home"].write_text(yaml.safe_dump(home, sort_keys=False, allow_unicode=True),
                             encoding="utf-8")
    paths["events"].write_text(events, encoding="utf-8")
    paths["annotations"].write_text(annotations, encoding="utf-8")
    return paths


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    results = getattr(acceptance, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n, (status, detail) in sorted(results.items()):
        terminalreporter.write_line(f"[{status}] criterion {n}: {detail}")
