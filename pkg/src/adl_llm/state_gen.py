"""Sensor events to sensor states.

Binary sensors pair ON/OFF edges directly. Plug sensors are thresholded on
power draw, temperature-like sensors are discretized into labelled ranges;
both produce ordinary ON/OFF events that then go through the same pairing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import ConfigurationError
from .model import (
    Diagnostics,
    Edge,
    HomeMetadata,
    SensorEvent,
    SensorState,
    ValueRange,
)


@dataclass(frozen=True)
class PlugThreshold:
    sensor_id: str
    watts: float

    def __post_init__(self) -> None:
        if not self.watts > 0:
            raise ConfigurationError(f"{self.sensor_id}: threshold must be > 0 W")


@dataclass(frozen=True)
class DiscretizationRanges:
    sensor_id: str
    ranges: tuple[ValueRange, ...]

    def __post_init__(self) -> None:
        if not self.ranges:
            raise ConfigurationError(f"{self.sensor_id}: no ranges configured")
        labels = [r.label for r in self.ranges]
        if len(set(labels)) != len(labels):
            raise ConfigurationError(f"{self.sensor_id}: duplicate range labels")
        for a, b in zip(self.ranges, self.ranges[1:]):
            if a.high != b.low:
                raise ConfigurationError(
                    f"{self.sensor_id}: ranges must be contiguous and non-overlapping"
                )

    def label_for(self, value: float) -> str:
        for r in self.ranges:
            if r.contains(value):
                return r.label
        raise ConfigurationError(
            f"{self.sensor_id}: value {value} falls outside every configured range"
        )


def threshold_continuous(
    samples: Iterable[tuple[float, float]], cfg: PlugThreshold
) -> list[SensorEvent]:
    """ON at the first sample >= threshold, OFF at the first sample below it.

    No hysteresis. The signal is assumed off before the first sample.
    """
    events: list[SensorEvent] = []
    on = False
    for t, value in samples:
        above = value >= cfg.watts
        if above and not on:
            events.append(SensorEvent(t, cfg.sensor_id, Edge.ON))
        elif on and not above:
            events.append(SensorEvent(t, cfg.sensor_id, Edge.OFF))
        on = above
    return events


def discretize_ranges(
    samples: Iterable[tuple[float, float]], cfg: DiscretizationRanges
) -> list[SensorEvent]:
    """Emit range-membership edges for a quasi-continuous signal.

    A change of range between two consecutive samples closes the old range at
    the earlier sample and opens the new one at the later sample.
    """
    events: list[SensorEvent] = []
    prev: tuple[float, str] | None = None
    for t, value in samples:
        label = cfg.label_for(value)
        if prev is None:
            events.append(SensorEvent(t, cfg.sensor_id, Edge.ON, label))
        elif label != prev[1]:
            events.append(SensorEvent(prev[0], cfg.sensor_id, Edge.OFF, prev[1]))
            events.append(SensorEvent(t, cfg.sensor_id, Edge.ON, label))
        prev = (t, label)
    return events


def readings_to_events(
    sensor_id: str, samples: Sequence[tuple[float, float]], meta: HomeMetadata
) -> list[SensorEvent]:
    """Dispatch numeric readings to thresholding or discretization per metadata."""
    sensor = meta.sensor(sensor_id)
    if sensor.threshold_watts is not None:
        return threshold_continuous(samples, PlugThreshold(sensor_id, sensor.threshold_watts))
    if sensor.ranges:
        return discretize_ranges(samples, DiscretizationRanges(sensor_id, sensor.ranges))
    raise ConfigurationError(
        f"sensor {sensor_id!r} reports numeric values but has neither a threshold "
        "nor discretization ranges"
    )


def state_sigma(meta: HomeMetadata, sensor_id: str, detail: str | None = None) -> str:
    prop = meta.sensor(sensor_id).state_property
    return f"{prop}[{detail}]" if detail else prop


def pair_events(
    events: Sequence[SensorEvent],
    meta: HomeMetadata,
    *,
    stream_end: float | None = None,
    diagnostics: Diagnostics | None = None,
) -> list[SensorState]:
    """Pair each ON with the next event of the same sensor when that is an OFF.

    An ON left open at the end of the stream becomes a truncated state that
    ends at ``stream_end`` (default: time of the last event). Orphan OFFs,
    repeated ONs and zero-length pairs are dropped and reported.
    """
    diag = diagnostics if diagnostics is not None else Diagnostics()
    if not events:
        return []
    end = events[-1].t if stream_end is None else stream_end
    open_on: dict[tuple[str, str | None], SensorEvent] = {}
    states: list[SensorState] = []

    def emit(on: SensorEvent, t_e: float, truncated: bool) -> None:
        if t_e <= on.t:
            diag.add("zero_length", f"{on.sensor_id} ON@{on.t} closes at {t_e}")
            return
        states.append(SensorState(
            sigma=state_sigma(meta, on.sensor_id, on.detail),
            sensor_id=on.sensor_id, t_s=on.t, t_e=t_e,
            truncated=truncated, detail=on.detail,
        ))

    for ev in events:
        key = (ev.sensor_id, ev.detail)
        if ev.edge is Edge.ON:
            if key in open_on:
                diag.add("repeated_on", f"{ev.sensor_id} ON@{open_on[key].t} superseded by ON@{ev.t}")
            open_on[key] = ev
        else:
            on = open_on.pop(key, None)
            if on is None:
                diag.add("orphan_off", f"{ev.sensor_id} OFF@{ev.t} without open ON")
                continue
            emit(on, ev.t, truncated=False)
    for on in open_on.values():
        emit(on, end, truncated=True)
    states.sort(key=lambda s: (s.t_s, s.sensor_id, s.detail or ""))
    return states


def states_to_events(states: Iterable[SensorState]) -> list[SensorEvent]:
    """Inverse of pairing for well-formed state lists (used for round trips)."""
    events = []
    for s in states:
        events.append(SensorEvent(s.t_s, s.sensor_id, Edge.ON, s.detail))
        events.append(SensorEvent(s.t_e, s.sensor_id, Edge.OFF, s.detail))
    # OFF before ON at equal times so back-to-back states stay separate
    events.sort(key=lambda e: (e.t, e.edge is Edge.ON))
    return events
