"""Command line entry point: ``adl-llm <command> ...``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from .errors import AdlError, ConfigurationError
from .evaluation import SplitConfig, ecdf, split, subsample, write_ecdf
from .fewshot import build_pool
from .ingest import load_annotations
from .llm_client import LLMConfig, LocalEmbedder, MemoEmbedder, make_client
from .model import Diagnostics, HomeMetadata
from .pipeline import (
    RunConfig,
    build_windows,
    load_states,
    read_predictions,
    run_recognize,
    score_predictions,
    write_report,
)
from .segmentation import WindowingConfig
from .window2text import render

log = logging.getLogger("adl_llm")


def _add_home_data(p: argparse.ArgumentParser, *, required: bool = True) -> None:
    p.add_argument("--home", required=required, help="home metadata (YAML or JSON)")
    p.add_argument("--events", help="event file: timestamp,sensor_id,value")
    p.add_argument("--intervals", help="interval file: start,end,sensor_id")
    p.add_argument("--annotations", required=required, help="annotation file: start,end,label")


def _add_windowing(p: argparse.ArgumentParser) -> None:
    p.add_argument("--profile", choices=["uci", "marble"], help="named window preset")
    p.add_argument("--window-seconds", type=float, help="window length tau")
    p.add_argument("--overlap", type=float, help="overlap fraction in [0, 1)")


def _add_llm(p: argparse.ArgumentParser) -> None:
    p.add_argument("--llm-endpoint", help="base URL of an OpenAI-compatible API")
    p.add_argument("--model")
    p.add_argument("--embedding-model")
    p.add_argument("--temperature", type=float)
    p.add_argument("--parallelism", type=int)
    p.add_argument("--mock", nargs="?", const=True, default=None, metavar="RESPONSES",
                   help="scripted model; optional JSON map of user-prompt SHA-256 to reply")
    p.add_argument("--replay", metavar="PATH", help="replay cache (JSONL)")
    p.add_argument("--record", action="store_true", help="append live responses to --replay")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adl-llm", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse logs, build states and windows")
    _add_home_data(p)
    _add_windowing(p)
    p.add_argument("--train-frac", type=float, help="also write train/test window files")
    p.add_argument("--out", required=True)

    pool = sub.add_parser("pool", help="example pool commands")
    pool_sub = pool.add_subparsers(dest="pool_command", required=True)
    p = pool_sub.add_parser("build", help="build a pool of examples from labelled windows")
    p.add_argument("--train", required=True, help="windows JSONL written by `ingest`")
    p.add_argument("--out", required=True)
    p.add_argument("--scarcity", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    _add_llm(p)

    p = sub.add_parser("recognize", help="full recognition and evaluation run")
    p.add_argument("--config", help="run config YAML; flags override it")
    _add_home_data(p, required=False)
    _add_windowing(p)
    _add_llm(p)
    p.add_argument("--mode", choices=["zero", "few"])
    p.add_argument("--k", type=int)
    p.add_argument("--pool", help="prebuilt pool JSONL (few-shot)")
    p.add_argument("--train-frac", type=float)
    p.add_argument("--scarcity", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")

    p = sub.add_parser("evaluate", help="score persisted predictions")
    p.add_argument("--predictions", required=True)
    p.add_argument("--home", help="home metadata, for activity order")
    p.add_argument("--out", required=True)

    report = sub.add_parser("report", help="report helpers")
    report_sub = report.add_subparsers(dest="report_command", required=True)
    p = report_sub.add_parser("ecdf", help="latency ECDF from predictions")
    p.add_argument("--predictions", required=True)
    p.add_argument("--out", required=True)
    return parser


def _windowing(args, base: WindowingConfig) -> WindowingConfig:
    if args.profile:
        base = WindowingConfig.profile(args.profile)
    return WindowingConfig(
        tau=args.window_seconds if args.window_seconds is not None else base.tau,
        overlap=args.overlap if args.overlap is not None else base.overlap,
    )


def _llm(args, base: LLMConfig) -> LLMConfig:
    overrides = {
        "endpoint_url": args.llm_endpoint,
        "model": args.model,
        "embedding_model": args.embedding_model,
        "temperature": args.temperature,
        "parallelism": args.parallelism,
    }
    return dataclasses.replace(base, **{k: v for k, v in overrides.items() if v is not None})


def _resolve_run_config(args) -> RunConfig:
    doc: dict = {}
    if args.config:
        doc = RunConfig.load(args.config).to_dict()
    base = RunConfig.from_dict(doc) if doc else None
    windowing = _windowing(args, base.windowing if base else WindowingConfig.profile("uci"))
    llm = _llm(args, base.llm if base else LLMConfig())
    base_split = base.split if base else SplitConfig()
    split_cfg = SplitConfig(
        train_fraction=args.train_frac if args.train_frac is not None else base_split.train_fraction,
        scarcity_percent=args.scarcity if args.scarcity is not None else base_split.scarcity_percent,
        seed=args.seed if args.seed is not None else base_split.seed,
    )
    fields = {
        "home": args.home, "events": args.events, "intervals": args.intervals,
        "annotations": args.annotations, "out": args.out, "pool": args.pool,
        "mock": args.mock, "replay": args.replay,
    }
    merged = dict(doc)
    merged.update({k: v for k, v in fields.items() if v is not None})
    if args.record:
        merged["record"] = True
    if args.mode:
        merged["mode"] = {"zero": "zero_shot", "few": "few_shot"}[args.mode]
    if args.k is not None:
        merged["selection"] = {"k": args.k}
    merged["windowing"] = windowing
    merged["llm"] = llm
    merged["split"] = split_cfg
    for required in ("home", "annotations", "out"):
        if not merged.get(required):
            raise ConfigurationError(f"--{required} is required (flag or config file)")
    return RunConfig.from_dict(merged)


def cmd_ingest(args) -> int:
    meta = HomeMetadata.load(args.home)
    if not (args.events or args.intervals):
        raise ConfigurationError("--events or --intervals is required")
    diag = Diagnostics()
    states = load_states(meta, args.events, args.intervals, diag)
    with open(args.annotations, encoding="utf-8") as fh:
        annotations = load_annotations(fh, meta)
    windows = build_windows(meta, states, annotations, _windowing(args, WindowingConfig.profile("uci")))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "states.jsonl").open("w", encoding="utf-8") as fh:
        for s in states:
            fh.write(json.dumps(dataclasses.asdict(s)) + "\n")
    records = []
    for w in windows:
        records.append({
            "t": w.t, "tau": w.tau, "truth": w.truth, "empty": w.empty,
            "states": [{"sigma": s.sigma, "sensor_id": s.sensor_id, "t_s": s.t_s,
                        "t_e": s.t_e, "category": c.value} for s, c in w.states],
            "text": render(w, meta).text,
        })

    def dump(name: str, rows) -> None:
        with (out / name).open("w", encoding="utf-8") as fh:
            for r in rows:
                fh.write(json.dumps(r, ensure_ascii=False) + "\n")

    dump("windows.jsonl", records)
    if args.train_frac is not None:
        labelled = [r for r in records if r["truth"] is not None]
        train, test = split(labelled, SplitConfig(train_fraction=args.train_frac))
        dump("train.jsonl", train)
        dump("test.jsonl", test)
    dump("diagnostics.jsonl", [{"kind": k, "message": m} for k, m in diag.entries])
    print(f"{len(states)} states, {len(windows)} windows -> {out}")
    return 0


def cmd_pool_build(args) -> int:
    cfg = _llm(args, LLMConfig())
    if args.mock or args.replay:
        embedder = make_client(cfg, mock=args.mock, replay=args.replay, record=args.record)
    else:
        embedder = LocalEmbedder()
        log.info("no model flags given; embedding with %s", embedder.tag)
    records = []
    with open(args.train, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                r = json.loads(line)
                if r.get("truth") is not None and not r.get("empty", False):
                    records.append(r)
    records = subsample(records, args.scarcity, args.seed)
    pool = build_pool(((r, r["truth"]) for r in records), lambda r: r["text"],
                      MemoEmbedder(embedder))
    pool.save(args.out)
    print(f"pool of {len(pool)} examples from {len(records)} windows -> {args.out}")
    return 0


def cmd_recognize(args) -> int:
    cfg = _resolve_run_config(args)
    report = run_recognize(cfg)
    print(report.to_table(), end="")
    print(f"report -> {cfg.out}")
    return 0


def cmd_evaluate(args) -> int:
    predictions = read_predictions(args.predictions)
    labels = HomeMetadata.load(args.home).activities if args.home else None
    report = score_predictions(predictions, labels)
    report.config_echo = {"predictions": args.predictions, "home": args.home}
    write_report(report, Path(args.out))
    print(report.to_table(), end="")
    return 0


def cmd_report_ecdf(args) -> int:
    points = ecdf(p.latency for p in read_predictions(args.predictions))
    write_ecdf(points, args.out)
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    handlers = {
        "ingest": cmd_ingest,
        "recognize": cmd_recognize,
        "evaluate": cmd_evaluate,
    }
    try:
        if args.command == "pool":
            return cmd_pool_build(args)
        if args.command == "report":
            return cmd_report_ecdf(args)
        return handlers[args.command](args)
    except AdlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
