"""Convert the UCI "Activities of Daily Living" raw tables to canonical files.

Reads ``<prefix>_Sensors.txt`` and ``<prefix>_ADLs.txt`` (whitespace-separated
tables with a two-line header) and writes ``home.yaml``, ``intervals.csv``
and ``annotations.csv`` into the output directory.

    python scripts/uci_to_canonical.py path/to/UCI_ADL OrdonezA out/home_a
"""

from __future__ import annotations

import argparse
import csv
from pathlib import Path

import yaml

LABELS = {
    "Breakfast": "preparing breakfast",
    "Lunch": "preparing lunch",
    "Dinner": "preparing dinner",
    "Snack": "snacking",
    "Grooming": "personal care",
    "Showering": "showering",
    "Leaving": "leaving",
    "Spare_Time/TV": "relaxing on couch",
    "Sleeping": "sleeping",
}
EXCLUDED = ["Toileting"]

ROOMS = {"Bedroom": "bedroom", "Bathroom": "bathroom", "Kitchen": "kitchen",
         "Living": "living room", "Entrance": "entrance"}

KINDS = {"Pressure": "pressure", "Magnetic": "magnetic", "PIR": "motion",
         "Electric": "plug", "Flush": "other"}

# (location, type) -> (state property, element, active, begin, end)
PHRASES = {
    ("Bed", "Pressure"): ("InBed", "bed", "the subject is already lying in bed",
                          "they lie down in bed", "they get out of bed"),
    ("Seat", "Pressure"): ("OnTheCouch", "couch", "the subject is already sitting on the couch",
                           "they sit on the couch", "they get up from the couch"),
    ("Cabinet", "Magnetic"): ("CabinetOpen", "bathroom cabinet",
                              "the bathroom cabinet is already open",
                              "they open the bathroom cabinet", "they close the bathroom cabinet"),
    ("Fridge", "Magnetic"): ("FridgeDoorOpen", "fridge door", "the fridge door is already open",
                             "they open the fridge door", "they close the fridge door"),
    ("Cupboard", "Magnetic"): ("CupboardOpen", "kitchen cupboard",
                               "the kitchen cupboard is already open",
                               "they open the kitchen cupboard", "they close the kitchen cupboard"),
    ("Maindoor", "Magnetic"): ("MainDoorOpen", "main door", "the main door is already open",
                               "they open the main door", "they close the main door"),
    ("Basin", "PIR"): ("NearBasin", "basin", "the subject is already near the basin",
                       "they move near the basin", "they step away from the basin"),
    ("Shower", "PIR"): ("InShower", "shower", "the subject is already in the shower",
                        "they step into the shower", "they leave the shower"),
    ("Cooktop", "PIR"): ("NearCooktop", "cooktop", "the subject is already near the cooktop",
                         "they move near the cooktop", "they step away from the cooktop"),
    ("Toaster", "Electric"): ("ToasterOn", "toaster", "the toaster is already on",
                              "they turn on the toaster", "they turn off the toaster"),
    ("Microwave", "Electric"): ("MicrowaveOn", "microwave", "the microwave is already on",
                                "they turn on the microwave", "they turn off the microwave"),
    ("Toilet", "Flush"): ("ToiletFlushed", "toilet flush", "the toilet flush is already active",
                          "they flush the toilet", "the toilet flush stops"),
    ("Door", "PIR"): ("NearDoor", "door", "the subject is already near the door",
                      "they move near the door", "they step away from the door"),
}


def rows(path: Path):
    for line in path.read_text(encoding="utf-8", errors="replace").splitlines():
        parts = line.split()
        # data rows start with a date; skip the header and dashed separator
        if len(parts) >= 5 and parts[0][:1].isdigit() and "-" in parts[0]:
            yield parts


def sensor_id(location: str, kind: str, place: str) -> str:
    return f"{place}_{location}_{kind}".lower()


def sensor_entry(location: str, kind: str, place: str) -> dict:
    prop, element, active, begin, end = PHRASES.get(
        (location, kind),
        (f"{location}{kind}Active", location.lower(), f"the {location.lower()} is already active",
         f"the {location.lower()} becomes active", f"the {location.lower()} becomes idle"))
    return {
        "id": sensor_id(location, kind, place), "room": ROOMS.get(place, place.lower()),
        "kind": KINDS.get(kind, "other"), "state_property": prop, "element": element,
        "phrases": {"active": active, "begin": begin, "end": end},
    }


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("raw_dir", type=Path)
    parser.add_argument("prefix", help="file prefix, e.g. OrdonezA")
    parser.add_argument("out", type=Path)
    parser.add_argument("--timezone", default="Europe/Madrid")
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    sensors: dict[str, dict] = {}
    dropped = 0
    with (args.out / "intervals.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["start", "end", "sensor_id"])
        for p in rows(args.raw_dir / f"{args.prefix}_Sensors.txt"):
            start, end = f"{p[0]}T{p[1]}", f"{p[2]}T{p[3]}"
            location, kind, place = p[4], p[5], p[6]
            entry = sensor_entry(location, kind, place)
            sensors.setdefault(entry["id"], entry)
            if start >= end:
                dropped += 1
                continue
            w.writerow([start, end, entry["id"]])

    seen_labels = set()
    with (args.out / "annotations.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["start", "end", "label"])
        for p in rows(args.raw_dir / f"{args.prefix}_ADLs.txt"):
            start, end, label = f"{p[0]}T{p[1]}", f"{p[2]}T{p[3]}", p[4]
            if start >= end:
                dropped += 1
                continue
            seen_labels.add(label)
            w.writerow([start, end, label])

    activities = [LABELS[k] for k in LABELS if k in seen_labels]
    unknown = seen_labels - set(LABELS) - set(EXCLUDED)
    if unknown:
        raise SystemExit(f"unmapped activity labels: {sorted(unknown)}")
    home = {
        "home_id": args.prefix,
        "timezone": args.timezone,
        "rooms": sorted({s["room"] for s in sensors.values()}),
        "activities": activities,
        "activity_merge": {k: v for k, v in LABELS.items() if k in seen_labels},
        "activity_exclusions": EXCLUDED,
        "sensors": list(sensors.values()),
    }
    (args.out / "home.yaml").write_text(yaml.safe_dump(home, sort_keys=False), encoding="utf-8")
    print(f"{len(sensors)} sensors, {len(activities)} activities, "
          f"{dropped} zero-length rows dropped -> {args.out}")


if __name__ == "__main__":
    main()
