"""Pool of labelled examples and similarity-based example selection."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import BuildError, SelectionError
from .llm_client import Embedder, Embedding
from .segmentation import Window
from .window2text import WindowText

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Example:
    text: str
    label: str
    embedding: Embedding


@dataclass(frozen=True)
class SelectionConfig:
    k: int = 7

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")


class ExamplePool:
    """Immutable list of examples with their embedding matrix precomputed."""

    def __init__(self, examples: Sequence[Example], embed_model_tag: str) -> None:
        self.examples = tuple(examples)
        self.embed_model_tag = embed_model_tag
        texts = [e.text for e in self.examples]
        if len(set(texts)) != len(texts):
            raise BuildError("pool texts must be unique")
        if self.examples:
            self._matrix = np.array([e.embedding.values for e in self.examples], dtype=float)
            self._norms = np.linalg.norm(self._matrix, axis=1)
        else:
            self._matrix = np.zeros((0, 0))
            self._norms = np.zeros(0)

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self):
        return iter(self.examples)

    def similarities(self, query: Embedding) -> np.ndarray:
        """Cosine similarity of ``query`` to every example; zero-norm rows give 0."""
        q = query.array()
        if q.shape[0] != self._matrix.shape[1]:
            raise SelectionError(
                f"query dim {q.shape[0]} does not match pool dim {self._matrix.shape[1]}"
            )
        qn = float(np.linalg.norm(q))
        denom = self._norms * qn
        dots = self._matrix @ q
        out = np.zeros(len(self.examples))
        ok = denom > 0
        out[ok] = dots[ok] / denom[ok]
        return out

    def save(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8") as fh:
            for e in self.examples:
                fh.write(json.dumps({
                    "text": e.text,
                    "label": e.label,
                    "embedding": list(e.embedding.values),
                    "embed_model_tag": self.embed_model_tag,
                }, ensure_ascii=False) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> ExamplePool:
        examples, tags = [], set()
        with Path(path).open(encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                d = json.loads(line)
                examples.append(Example(d["text"], d["label"], Embedding(tuple(d["embedding"]))))
                tags.add(d.get("embed_model_tag", ""))
        if len(tags) > 1:
            raise BuildError(f"{path}: pool mixes embedding models {sorted(tags)}")
        return cls(examples, tags.pop() if tags else "")


def dedupe_labelled_texts(pairs: Iterable[tuple[str, str]]) -> list[tuple[str, str]]:
    """Collapse repeated (text, label) pairs, then drop texts seen with >1 label.

    Survivors keep the order of their first occurrence.
    """
    labels: dict[str, set[str]] = {}
    order: list[str] = []
    first_label: dict[str, str] = {}
    for text, label in pairs:
        if text not in labels:
            labels[text] = set()
            order.append(text)
            first_label[text] = label
        labels[text].add(label)
    return [(t, first_label[t]) for t in order if len(labels[t]) == 1]


def build_pool(
    labeled: Iterable[tuple[Window, str]],
    renderer: Callable[[Window], WindowText | str],
    embedder: Embedder,
) -> ExamplePool:
    pairs = []
    for window, label in labeled:
        rendered = renderer(window)
        pairs.append((rendered.text if isinstance(rendered, WindowText) else rendered, label))
    kept = dedupe_labelled_texts(pairs)
    examples = []
    for text, label in kept:
        try:
            emb = embedder.embed(text)
        except Exception as exc:
            raise BuildError(f"could not embed example {text[:80]!r}: {exc}") from exc
        examples.append(Example(text, label, emb))
    log.info("pool: %d labelled windows -> %d examples", len(pairs), len(examples))
    return ExamplePool(examples, getattr(embedder, "tag", ""))


def select_examples(
    pool: ExamplePool,
    query: WindowText | str,
    embedder: Embedder,
    cfg: SelectionConfig,
) -> list[Example]:
    """The ``k`` pool examples most cosine-similar to the query text.

    Returned in non-increasing similarity; equal similarities keep pool order.
    """
    if not len(pool):
        raise SelectionError("example pool is empty; use zero-shot prompting")
    text = query.text if isinstance(query, WindowText) else query
    sims = pool.similarities(embedder.embed(text))
    k = cfg.k
    if k > len(pool):
        log.warning("k=%d exceeds pool size %d; using all examples", k, len(pool))
        k = len(pool)
    # stable sort on negated similarity == arg max with earliest-index tie break
    order = np.argsort(-sims, kind="stable")[:k]
    return [pool.examples[i] for i in order]
