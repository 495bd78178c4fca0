"""Write the scripted 24-hour synthetic home to a directory."""

import argparse
from pathlib import Path

import yaml

from adl_llm import synthetic

parser = argparse.ArgumentParser(description=__doc__)
parser.add_argument("out", type=Path)
parser.add_argument("--seed", type=int, default=7)
args = parser.parse_args()

home, events, annotations = synthetic.generate(args.seed)
args.out.mkdir(parents=True, exist_ok=True)
(args.out / "home.yaml").write_text(yaml.safe_dump(home, sort_keys=False, allow_unicode=True))
(args.out / "events.csv").write_text(events)
(args.out / "annotations.csv").write_text(annotations)
print(f"synthetic home -> {args.out}")
