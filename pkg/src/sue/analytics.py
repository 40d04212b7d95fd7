"""Query-side summaries over a run: counts, bucketed timelines, detail views.

All queries are read-only over engine snapshots; ranges are half-open
[t0, t1) so bucket sums always equal summary totals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Optional

from .engine import Engine, ProofTrace
from .model import (
    ComplexEvent,
    SimpleEvent,
    ValidationError,
    classify_belief,
)


class NotFoundError(KeyError):
    pass


@dataclass(frozen=True)
class Summary:
    by_type: dict[str, int]
    by_level: dict[str, int]
    by_owner: dict[str, int]

    @property
    def total(self) -> int:
        return sum(self.by_type.values())

    def to_dict(self) -> dict[str, Any]:
        return {"by_type": self.by_type, "by_level": self.by_level, "by_owner": self.by_owner}


@dataclass(frozen=True)
class TimelineBucket:
    start_ms: int
    width_ms: int
    counts: dict[str, int]

    def to_dict(self) -> dict[str, Any]:
        return {"start_ms": self.start_ms, "width_ms": self.width_ms, "counts": self.counts}


@dataclass(frozen=True)
class EventDetail:
    kind: str  # "simple" | "complex"
    event: SimpleEvent | ComplexEvent
    constituents: tuple[SimpleEvent, ...] = ()
    trace: Optional[ProofTrace] = None

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"kind": self.kind, "event": self.event.to_dict()}
        if self.kind == "complex":
            d["constituents"] = [e.to_dict() for e in self.constituents]
            d["trace"] = self.trace.to_dict() if self.trace else None
        return d


class Analytics:
    """Read-only view over an engine's events and complex-event episodes."""

    def __init__(self, engine: Engine):
        self.engine = engine

    def _timed_items(self) -> list[tuple[int, str, str, str]]:
        """(time, event_type, level, owner) for every countable item.

        Simple events carry their confidence-derived level; complex events
        count once, at activation time, under their fluent name.
        """
        items: list[tuple[int, str, str, str]] = []
        thresholds = self.engine.thresholds
        for e in self.engine.events.values():
            conf = min(max(e.confidence, 0.0), 1.0)
            level = classify_belief(conf, thresholds).wire
            sensor = self.engine_registry_owner(e.sensor_id)
            items.append((e.time, e.event_type, level, sensor))
        for ce in self.engine.complex_events.values():
            items.append((ce.active_since, ce.fluent, ce.belief.wire, ""))
        return items

    def engine_registry_owner(self, sensor_id: str) -> str:
        # The gateway attaches a registry; standalone engines may not have one.
        registry = getattr(self.engine, "registry", None)
        if registry is not None:
            sensor = registry.get(sensor_id)
            if sensor is not None:
                return sensor.owner.code
        return ""

    def summary(self, t0: int, t1: int) -> Summary:
        if t0 > t1:
            raise ValidationError(f"inverted range [{t0}, {t1})")
        by_type: dict[str, int] = {}
        by_level: dict[str, int] = {}
        by_owner: dict[str, int] = {}
        for time, etype, level, owner in self._timed_items():
            if not (t0 <= time < t1):
                continue
            by_type[etype] = by_type.get(etype, 0) + 1
            by_level[level] = by_level.get(level, 0) + 1
            if owner:
                by_owner[owner] = by_owner.get(owner, 0) + 1
        return Summary(by_type=by_type, by_level=by_level, by_owner=by_owner)

    def timeline(self, t0: int, t1: int, bucket_width_ms: int) -> list[TimelineBucket]:
        if t0 > t1:
            raise ValidationError(f"inverted range [{t0}, {t1})")
        if bucket_width_ms <= 0:
            raise ValidationError("bucket width must be positive")
        n_buckets = math.ceil((t1 - t0) / bucket_width_ms)
        buckets = [
            TimelineBucket(start_ms=t0 + i * bucket_width_ms, width_ms=bucket_width_ms, counts={})
            for i in range(n_buckets)
        ]
        for time, etype, _level, _owner in self._timed_items():
            if not (t0 <= time < t1):
                continue
            b = buckets[(time - t0) // bucket_width_ms]
            b.counts[etype] = b.counts.get(etype, 0) + 1
        return buckets

    def event_detail(self, event_id: str) -> EventDetail:
        simple = self.engine.events.get(event_id)
        if simple is not None:
            return EventDetail(kind="simple", event=simple)
        ce = self.engine.complex_events.get(event_id)
        if ce is not None:
            constituents = tuple(
                sorted(
                    (self.engine.events[i] for i in ce.constituents),
                    key=lambda e: (e.time, e.id),
                )
            )
            return EventDetail(
                kind="complex",
                event=ce,
                constituents=constituents,
                trace=self.engine.traces.get(ce.trace),
            )
        raise NotFoundError(event_id)
