"""Fixed-time overlapping windows over the state stream."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Sequence

from .errors import ConfigurationError, ContractViolation
from .model import ActivityAnnotation, SensorState

# float slack for "does the last window still fit in the span"
_EPS = 1e-9


@dataclass(frozen=True)
class WindowingConfig:
    tau: float
    overlap: float

    def __post_init__(self) -> None:
        if not self.tau > 0:
            raise ConfigurationError(f"window length must be > 0, got {self.tau}")
        if not 0 <= self.overlap < 1:
            raise ConfigurationError(f"overlap must be in [0, 1), got {self.overlap}")

    @property
    def stride(self) -> float:
        return self.tau * (1 - self.overlap)

    @classmethod
    def profile(cls, name: str) -> WindowingConfig:
        try:
            return PROFILES[name.lower()]
        except KeyError:
            raise ConfigurationError(
                f"unknown windowing profile {name!r}; known: {', '.join(PROFILES)}"
            ) from None


PROFILES = {
    "marble": WindowingConfig(tau=16.0, overlap=0.8),
    "uci": WindowingConfig(tau=60.0, overlap=0.8),
}


class Category(str, Enum):
    INNER = "Inner"
    ALREADY_ACTIVE = "AlreadyActive"
    PERSISTENT = "Persistent"
    ALREADY_ACTIVE_AND_PERSISTENT = "AlreadyActiveAndPersistent"

    @property
    def already_active(self) -> bool:
        return self in (Category.ALREADY_ACTIVE, Category.ALREADY_ACTIVE_AND_PERSISTENT)

    @property
    def persistent(self) -> bool:
        return self in (Category.PERSISTENT, Category.ALREADY_ACTIVE_AND_PERSISTENT)


@dataclass(frozen=True)
class Window:
    t: float
    tau: float
    states: tuple[tuple[SensorState, Category], ...] = field(default=())
    truth: str | None = None

    @property
    def end(self) -> float:
        return self.t + self.tau

    @property
    def empty(self) -> bool:
        return not self.states


def intersects(state: SensorState, t: float, tau: float) -> bool:
    return state.t_s <= t + tau and state.t_e >= t


def categorize(state: SensorState, window: tuple[float, float]) -> Category:
    t, tau = window
    if not intersects(state, t, tau):
        raise ContractViolation(
            f"state {state.sigma} [{state.t_s}, {state.t_e}] does not intersect "
            f"window [{t}, {t + tau}]"
        )
    before = state.t_s < t
    after = state.t_e > t + tau
    if before and after:
        return Category.ALREADY_ACTIVE_AND_PERSISTENT
    if before:
        return Category.ALREADY_ACTIVE
    if after:
        return Category.PERSISTENT
    return Category.INNER


def window_starts(cfg: WindowingConfig, span: tuple[float, float]) -> list[float]:
    start, end = span
    if not start < end:
        raise ConfigurationError(f"empty span {span}")
    n = math.floor((end - start - cfg.tau) / cfg.stride + _EPS) + 1
    # start + k*stride rather than accumulation, so drift never builds up
    return [start + k * cfg.stride for k in range(max(n, 0))]


def segment(
    states: Sequence[SensorState],
    cfg: WindowingConfig,
    span: tuple[float, float],
) -> list[Window]:
    """Associate every state intersecting ``[t, t+tau]`` with window ``t``.

    ``states`` must be sorted by ``t_s``. Windows with nothing associated are
    still produced; check ``Window.empty``.
    """
    windows: list[Window] = []
    active: list[SensorState] = []
    nxt = 0
    for t in window_starts(cfg, span):
        hi = t + cfg.tau
        while nxt < len(states) and states[nxt].t_s <= hi:
            active.append(states[nxt])
            nxt += 1
        # window starts only grow, so a state that ended before t is gone for good
        active = [s for s in active if s.t_e >= t]
        windows.append(Window(
            t=t, tau=cfg.tau,
            states=tuple((s, categorize(s, (t, cfg.tau))) for s in active),
        ))
    return windows


def overlap_seconds(a_start: float, a_end: float, b_start: float, b_end: float) -> float:
    return max(0.0, min(a_end, b_end) - max(a_start, b_start))


def assign_truth(window: Window, annotations: Iterable[ActivityAnnotation]) -> str | None:
    """Label of the annotation overlapping the window the most.

    Ties go to the annotation that starts first; no overlap gives ``None``.
    """
    best: tuple[float, float] | None = None
    label = None
    for ann in annotations:
        ov = overlap_seconds(window.t, window.end, ann.start, ann.end)
        if ov <= 0:
            continue
        key = (-ov, ann.start)
        if best is None or key < best:
            best, label = key, ann.label
    return label


def label_windows(
    windows: Sequence[Window], annotations: Sequence[ActivityAnnotation]
) -> list[Window]:
    anns = sorted(annotations, key=lambda a: a.start)
    out = []
    j = 0
    for w in windows:
        # skip annotations that ended before this (and every later) window
        while j < len(anns) and anns[j].end <= w.t:
            j += 1
        candidates = []
        for a in anns[j:]:
            if a.start >= w.end:
                break
            candidates.append(a)
        out.append(replace(w, truth=assign_truth(w, candidates)))
    return out
