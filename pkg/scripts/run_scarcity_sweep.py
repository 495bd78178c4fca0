"""Few-shot runs at every labelled-data level, plus a zero-shot baseline.

Takes a run config YAML (the same file ``adl-llm recognize --config`` reads)
and writes one sub-directory per level and a ``sweep.tsv`` summary:

    python scripts/run_scarcity_sweep.py run.yaml --out sweeps/marble --seeds 0 1 2
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import statistics
from pathlib import Path

from adl_llm.evaluation import SCARCITY_LEVELS
from adl_llm.fewshot import SelectionConfig
from adl_llm.pipeline import RunConfig, run_recognize


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("config", type=Path)
    parser.add_argument("--out", type=Path, required=True)
    parser.add_argument("--k", type=int, default=7)
    parser.add_argument("--seeds", type=int, nargs="+", default=[0])
    args = parser.parse_args()
    logging.basicConfig(level=logging.WARNING)

    base = RunConfig.load(args.config)
    rows = []
    zero = run_recognize(dataclasses.replace(base, mode="zero_shot", out=str(args.out / "zero")))
    rows.append(("zero-shot", "-", f"{zero.weighted_f1:.4f}", "-"))
    for percent in SCARCITY_LEVELS:
        scores = []
        for seed in args.seeds:
            cfg = dataclasses.replace(
                base, mode="few_shot", pool=None,
                selection=SelectionConfig(args.k),
                split=dataclasses.replace(base.split, scarcity_percent=percent, seed=seed),
                out=str(args.out / f"few_{percent}_seed{seed}"),
            )
            scores.append(run_recognize(cfg).weighted_f1)
        spread = f"{statistics.stdev(scores):.4f}" if len(scores) > 1 else "-"
        rows.append((f"few-shot k={args.k}", f"{percent}%",
                     f"{statistics.mean(scores):.4f}", spread))

    lines = ["setting\tlabelled data\tweighted_f1\tstdev"] + ["\t".join(r) for r in rows]
    (args.out / "sweep.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print("\n".join(lines))


if __name__ == "__main__":
    main()
