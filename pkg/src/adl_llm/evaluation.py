"""Train/test split, scarcity subsampling, metrics and report writers."""

from __future__ import annotations

import csv
import io
import json
import math
import random
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence, TypeVar

from .errors import ConfigurationError, ScoringError
from .label_extract import Prediction

T = TypeVar("T")

SCARCITY_LEVELS = (100, 50, 25, 10, 5)


@dataclass(frozen=True)
class SplitConfig:
    train_fraction: float = 0.30
    scarcity_percent: int = 100
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0 < self.train_fraction < 1:
            raise ConfigurationError(f"train_fraction must be in (0, 1), got {self.train_fraction}")
        if self.scarcity_percent not in SCARCITY_LEVELS:
            raise ConfigurationError(
                f"scarcity_percent must be one of {SCARCITY_LEVELS}, got {self.scarcity_percent}"
            )


def split(windows: Sequence[T], cfg: SplitConfig) -> tuple[list[T], list[T]]:
    """Chronological split: the first ceil(fraction * N) windows train, the rest test."""
    n = len(windows)
    if n < 2:
        raise ConfigurationError(f"need at least 2 windows to split, got {n}")
    # fraction*N is computed in floats; 0.3*10 == 3.0000000000000004
    n_train = math.ceil(round(cfg.train_fraction * n, 9))
    n_train = min(max(n_train, 1), n - 1)
    return list(windows[:n_train]), list(windows[n_train:])


def subsample(train: Sequence[T], percent: int, seed: int) -> list[T]:
    """Uniform sample without replacement of round(percent% of |train|), order kept."""
    if percent not in SCARCITY_LEVELS:
        raise ConfigurationError(f"percent must be one of {SCARCITY_LEVELS}, got {percent}")
    if percent == 100:
        return list(train)
    size = math.floor(percent * len(train) / 100 + 0.5)
    idx = sorted(random.Random(seed).sample(range(len(train)), size))
    return [train[i] for i in idx]


def ecdf(latencies: Iterable[float]) -> list[tuple[float, float]]:
    values = sorted(latencies)
    if not values:
        raise ValueError("ECDF of an empty sample")
    if values[0] < 0:
        raise ValueError("latencies must be non-negative")
    n = len(values)
    out: list[tuple[float, float]] = []
    for i, x in enumerate(values):
        if i + 1 < n and values[i + 1] == x:
            continue
        out.append((x, (i + 1) / n))
    return out


@dataclass
class EvalReport:
    labels: list[str]
    per_activity_f1: dict[str, float]
    precision: dict[str, float]
    recall: dict[str, float]
    support: dict[str, int]
    weighted_f1: float
    confusion: list[list[int]]
    ecdf: list[tuple[float, float]]
    n_scored: int
    fallback_count: int = 0
    counts: dict[str, int] = field(default_factory=dict)
    config_echo: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "weighted_f1": self.weighted_f1,
            "n_scored": self.n_scored,
            "fallback_count": self.fallback_count,
            "labels": self.labels,
            "per_activity": {
                label: {
                    "f1": self.per_activity_f1.get(label),
                    "precision": self.precision.get(label),
                    "recall": self.recall.get(label),
                    "support": self.support.get(label, 0),
                }
                for label in self.labels
            },
            "confusion": {"rows": "truth", "columns": "predicted", "matrix": self.confusion},
            "ecdf": [list(p) for p in self.ecdf],
            "counts": dict(self.counts),
            "config": self.config_echo,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"

    def to_table(self) -> str:
        """Tab-separated per-activity F1 table with a weighted-average row.

        Activities without support in the test data show "—".
        """
        buf = io.StringIO()
        w = csv.writer(buf, delimiter="\t", lineterminator="\n")
        w.writerow(["activity", "f1", "support"])
        for label in self.labels:
            f1 = self.per_activity_f1.get(label)
            w.writerow([label, "—" if f1 is None else f"{f1:.2f}", self.support.get(label, 0)])
        w.writerow(["Weighted Avg.", f"{self.weighted_f1:.2f}", self.n_scored])
        return buf.getvalue()


def write_ecdf(points: Sequence[tuple[float, float]], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write("latency_seconds\tcumulative_fraction\n")
        for x, f in points:
            fh.write(f"{x!r}\t{f!r}\n")


def score(
    predictions: Sequence[Prediction],
    truths: Iterable[tuple[float, str]],
    labels: Sequence[str] | None = None,
) -> EvalReport:
    """Per-class and support-weighted F1, confusion matrix and latency ECDF.

    Every prediction must have a truth with the same ``window_start``. Classes
    with no support get no F1 entry (shown as "—" in tables).
    """
    truth_by_start = dict(truths)
    pairs: list[tuple[str, str]] = []
    for p in predictions:
        if p.window_start not in truth_by_start:
            raise ScoringError(f"prediction for window {p.window_start} has no ground truth")
        pairs.append((truth_by_start[p.window_start], p.label))
    if not pairs:
        raise ScoringError("no predictions to score")

    seen = {t for t, _ in pairs} | {q for _, q in pairs}
    ordered = list(labels) if labels is not None else []
    ordered += sorted(seen - set(ordered))
    index = {label: i for i, label in enumerate(ordered)}

    confusion = [[0] * len(ordered) for _ in ordered]
    for t, q in pairs:
        confusion[index[t]][index[q]] += 1

    n = len(pairs)
    support = Counter(t for t, _ in pairs)
    predicted = Counter(q for _, q in pairs)
    f1s: dict[str, float] = {}
    prec: dict[str, float] = {}
    rec: dict[str, float] = {}
    for label in ordered:
        if not support[label]:
            continue
        tp = confusion[index[label]][index[label]]
        p = tp / predicted[label] if predicted[label] else 0.0
        r = tp / support[label]
        prec[label], rec[label] = p, r
        f1s[label] = 2 * p * r / (p + r) if p + r else 0.0
    weighted = math.fsum(support[c] / n * f for c, f in f1s.items())

    return EvalReport(
        labels=ordered,
        per_activity_f1=f1s,
        precision=prec,
        recall=rec,
        support={label: support[label] for label in ordered},
        weighted_f1=weighted,
        confusion=confusion,
        ecdf=ecdf(p.latency for p in predictions),
        n_scored=n,
        fallback_count=sum(p.via_fallback for p in predictions),
    )
