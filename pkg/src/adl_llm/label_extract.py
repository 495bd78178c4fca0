"""Recover a candidate activity label from free-text model output."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ExtractionError
from .llm_client import Embedder

_BRACES = re.compile(r"\{([^{}]*)\}")


@dataclass(frozen=True)
class Prediction:
    window_start: float
    label: str
    raw_output: str
    via_fallback: bool
    latency: float
    truth: str | None = None


def normalize(label: str) -> str:
    return " ".join(label.split()).casefold()


def answer_span(raw: str) -> str:
    """Content of the last ``{...}`` group, else the last non-empty line."""
    groups = _BRACES.findall(raw)
    if groups and groups[-1].strip():
        return groups[-1].strip()
    lines = [ln.strip() for ln in raw.splitlines() if ln.strip()]
    return lines[-1] if lines else ""


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    denom = float(np.linalg.norm(a) * np.linalg.norm(b))
    return float(a @ b) / denom if denom > 0 else 0.0


def extract(raw: str, activities: Sequence[str], embedder: Embedder) -> tuple[str, bool]:
    """Return ``(label, via_fallback)``.

    An exact (case- and whitespace-insensitive) match of the last brace group
    wins outright. Anything else is resolved to the candidate whose embedding
    is most cosine-similar to the answer text, ties going to the earlier
    candidate.
    """
    if not activities:
        raise ValueError("no candidate activities")
    if not raw or not raw.strip():
        raise ExtractionError("empty model output")
    groups = _BRACES.findall(raw)
    if groups:
        wanted = normalize(groups[-1])
        for label in activities:
            if normalize(label) == wanted:
                return label, False
    span = answer_span(raw)
    if not span:
        raise ExtractionError(f"nothing to match in model output {raw[:80]!r}")
    try:
        query = embedder.embed(span).array()
        sims = [_cosine(query, embedder.embed(label).array()) for label in activities]
    except Exception as exc:
        raise ExtractionError(f"embedding failed during label fallback: {exc}") from exc
    best = max(range(len(activities)), key=lambda i: (sims[i], -i))
    return activities[best], True
