"""End-to-end run: logs -> states -> windows -> prompts -> LLM -> labels -> report."""

from __future__ import annotations

import dataclasses
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml

from . import fewshot
from .errors import ConfigurationError
from .evaluation import EvalReport, SplitConfig, score, split, subsample, write_ecdf
from .fewshot import ExamplePool, SelectionConfig
from .ingest import load_annotations, parse_event_stream, parse_interval_records
from .label_extract import Prediction, extract
from .llm_client import LLMConfig, LocalEmbedder, MemoEmbedder, complete_many, make_client
from .model import Diagnostics, HomeMetadata, SensorState
from .prompting import PromptBundle, PromptTemplates, build_bundle
from .segmentation import Window, WindowingConfig, label_windows, segment
from .state_gen import pair_events
from .window2text import WindowText, render

log = logging.getLogger(__name__)

MODES = ("zero_shot", "few_shot")


@dataclass(frozen=True)
class RunConfig:
    home: str
    annotations: str
    out: str
    events: str | None = None
    intervals: str | None = None
    windowing: WindowingConfig = WindowingConfig.profile("uci")
    llm: LLMConfig = LLMConfig()
    selection: SelectionConfig = SelectionConfig()
    split: SplitConfig = SplitConfig()
    mode: str = "zero_shot"
    pool: str | None = None
    mock: str | bool | None = None
    replay: str | None = None
    record: bool = False
    skip_empty: bool = True
    templates: str | None = None

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not (self.events or self.intervals):
            raise ConfigurationError("a run needs an events file or an interval file")
        for name in ("home", "annotations", "events", "intervals", "pool"):
            path = getattr(self, name)
            if path is not None and not Path(path).exists():
                raise ConfigurationError(f"{name} path does not exist: {path}")
        if self.replay is not None and not self.record and not Path(self.replay).exists():
            raise ConfigurationError(f"replay cache does not exist: {self.replay}")

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> RunConfig:
        doc = dict(doc)
        nested = {"windowing": WindowingConfig, "llm": LLMConfig,
                  "selection": SelectionConfig, "split": SplitConfig}
        for key, typ in nested.items():
            if isinstance(doc.get(key), Mapping):
                doc[key] = typ(**doc[key])
        unknown = set(doc) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise ConfigurationError(f"unknown run config keys: {sorted(unknown)}")
        return cls(**doc)

    @classmethod
    def load(cls, path: str | Path) -> RunConfig:
        doc = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        return cls.from_dict(doc)


def load_states(
    meta: HomeMetadata,
    events: str | None,
    intervals: str | None,
    diagnostics: Diagnostics | None = None,
) -> list[SensorState]:
    states: list[SensorState] = []
    if events:
        with open(events, encoding="utf-8") as fh:
            evs = parse_event_stream(fh, meta)
        states += pair_events(evs, meta, diagnostics=diagnostics)
    if intervals:
        with open(intervals, encoding="utf-8") as fh:
            states += parse_interval_records(fh, meta, diagnostics=diagnostics)
    states.sort(key=lambda s: (s.t_s, s.sensor_id, s.detail or ""))
    return states


def build_windows(
    meta: HomeMetadata,
    states: list[SensorState],
    annotations,
    cfg: WindowingConfig,
) -> list[Window]:
    starts = [s.t_s for s in states[:1]] + [a.start for a in annotations]
    ends = [s.t_e for s in states] + [a.end for a in annotations]
    if not starts or not ends:
        return []
    span = (min(starts), max(ends))
    if span[0] >= span[1]:
        return []
    return label_windows(segment(states, cfg, span), annotations)


def nearest_label_responder(meta: HomeMetadata):
    """Deterministic stand-in model: answers with the activity whose local
    embedding is closest to the window description."""
    embedder = MemoEmbedder(LocalEmbedder())

    def respond(bundle: PromptBundle) -> str:
        label, _ = extract("{" + bundle.user + "}", meta.activities, embedder)
        return f"The description is closest to {label}.\n{{{label}}}"

    return respond


@dataclass
class RunPlan:
    """Everything a run decides before contacting the model."""

    meta: HomeMetadata
    windows: list[Window]
    train: list[Window]
    test: list[Window]
    targets: list[Window]
    texts: list[WindowText]
    bundles: list[PromptBundle]
    pool: ExamplePool | None
    mode_used: str
    counts: dict[str, int] = field(default_factory=dict)
    diagnostics: Diagnostics = field(default_factory=Diagnostics)


def prepare_run(cfg: RunConfig, client=None) -> tuple[RunPlan, Any]:
    meta = HomeMetadata.load(cfg.home)
    diag = Diagnostics()
    states = load_states(meta, cfg.events, cfg.intervals, diag)
    with open(cfg.annotations, encoding="utf-8") as fh:
        annotations = load_annotations(fh, meta)
    windows = build_windows(meta, states, annotations, cfg.windowing)
    labelled = [w for w in windows if w.truth is not None]
    train, test = split(labelled, cfg.split)

    if client is None:
        client = make_client(cfg.llm, mock=cfg.mock, replay=cfg.replay, record=cfg.record,
                             mock_default=nearest_label_responder(meta) if cfg.mock is True else None)
    embedder = MemoEmbedder(client)
    templates = PromptTemplates.load(cfg.templates)

    pool = None
    mode_used = cfg.mode
    if cfg.mode == "few_shot":
        if cfg.pool:
            pool = ExamplePool.load(cfg.pool)
            if pool.embed_model_tag and pool.embed_model_tag != embedder.tag:
                log.warning("pool was embedded with %s but this run embeds with %s",
                            pool.embed_model_tag, embedder.tag)
        else:
            available = subsample(train, cfg.split.scarcity_percent, cfg.split.seed)
            pool = fewshot.build_pool(
                ((w, w.truth) for w in available if not (cfg.skip_empty and w.empty)),
                lambda w: render(w, meta), embedder,
            )
        if not len(pool):
            log.warning("example pool is empty; falling back to zero-shot prompting")
            mode_used = "zero_shot"

    selection = cfg.selection
    if mode_used == "few_shot" and selection.k > len(pool):
        log.warning("k=%d exceeds pool size %d; using all examples", selection.k, len(pool))
        selection = SelectionConfig(len(pool))

    targets = [w for w in test if not (cfg.skip_empty and w.empty)]
    texts = [render(w, meta) for w in targets]
    bundles = []
    for wt in texts:
        examples: list[tuple[str, str]] = []
        if mode_used == "few_shot":
            picked = fewshot.select_examples(pool, wt, embedder, selection)
            examples = [(e.text, e.label) for e in picked]
        bundles.append(build_bundle(wt, meta, examples, model_hint=cfg.llm.model,
                                    templates=templates))
    counts = {
        "windows": len(windows),
        "labelled_windows": len(labelled),
        "unlabelled_windows": len(windows) - len(labelled),
        "train_windows": len(train),
        "test_windows": len(test),
        "no_data_test_windows": len(test) - len(targets),
        "pool_size": len(pool) if pool is not None else 0,
        "sensor_states": len(states),
        "diagnostics": len(diag),
    }
    plan = RunPlan(meta, windows, train, test, targets, texts, bundles, pool, mode_used,
                   counts, diag)
    return plan, client


def recognize(plan: RunPlan, client, parallelism: int = 1) -> list[Prediction]:
    responses = complete_many(client, plan.bundles, parallelism)
    embedder = MemoEmbedder(client)
    predictions = []
    for window, response in zip(plan.targets, responses):
        label, via_fallback = extract(response.content, plan.meta.activities, embedder)
        predictions.append(Prediction(
            window_start=window.t, label=label, raw_output=response.content,
            via_fallback=via_fallback, latency=response.latency, truth=window.truth,
        ))
    return predictions


def write_predictions(predictions: list[Prediction], path: Path) -> None:
    with path.open("w", encoding="utf-8") as fh:
        for p in predictions:
            fh.write(json.dumps(dataclasses.asdict(p), ensure_ascii=False) + "\n")


def read_predictions(path: str | Path) -> list[Prediction]:
    out = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(Prediction(**json.loads(line)))
    return out


def score_predictions(predictions: list[Prediction], labels) -> EvalReport:
    truths = [(p.window_start, p.truth) for p in predictions if p.truth is not None]
    return score(predictions, truths, labels)


def write_report(report: EvalReport, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json(), encoding="utf-8")
    (out / "report.tsv").write_text(report.to_table(), encoding="utf-8")
    write_ecdf(report.ecdf, out / "ecdf.tsv")


def run_recognize(cfg: RunConfig, client=None) -> EvalReport:
    plan, client = prepare_run(cfg, client)
    predictions = recognize(plan, client, cfg.llm.parallelism)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_predictions(predictions, out / "predictions.jsonl")
    report = score_predictions(predictions, plan.meta.activities)
    report.counts = {**plan.counts, "mode_used": plan.mode_used}
    report.config_echo = cfg.to_dict()
    write_report(report, out)
    return report
