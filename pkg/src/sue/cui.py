"""Deterministic conversational command interpreter.

Utterances are matched against a prioritized list of keyword patterns;
the first match wins. `interpret` is pure; `execute` applies the intent
to a console session and returns a text reply plus a UI directive.

Priority order (first match wins):
  1. help
  2. describe_event
  3. show_sensors_by
  4. set_palette
  5. filter_events
  6. show_timeline
  7. unknown (fallback)
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Any, Optional

from .analytics import Analytics, NotFoundError

HELP_TEXT = (
    "I can: show sensors by type/owner, switch to the accessible palette, "
    "filter events by level or type, describe an event by id, and show the "
    "event timeline."
)


@dataclass(frozen=True)
class Intent:
    kind: str
    args: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class UiDirective:
    op: str  # set_sensor_view | set_palette | set_filter | focus_event | show_timeline | none
    args: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {"op": self.op, "args": self.args}


NONE_DIRECTIVE = UiDirective(op="none")


@dataclass(frozen=True)
class Session:
    """Per-console view state; mirrored by the map client."""

    sensor_view: str = "type"  # "type" | "owner"
    palette: str = "default"  # "default" | "accessible"
    filter: Optional[dict[str, str]] = None
    focused_event: Optional[str] = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "sensor_view": self.sensor_view,
            "palette": self.palette,
            "filter": self.filter,
            "focused_event": self.focused_event,
        }


_OWNER_WORDS = r"(?:owner|owners|ownership|flag|flags|country|countries|partner|partners|nation|nations)"
_TYPE_WORDS = r"(?:type|types|kind|kinds|icon|icons|category|categories)"
_LEVELS = r"(?:strong|medium|weak|not[ _]significant)"

_EVENT_ID = r"(?P<id>[A-Za-z0-9_.:-]+)"

# (kind, compiled pattern, args extractor); first match wins.
_MATCHERS: list[tuple[str, re.Pattern[str]]] = [
    ("help", re.compile(r"\b(?:help|what can you do|commands?)\b")),
    ("describe_event", re.compile(
        r"\b(?:describe|explain|detail|details of|tell me about|what is|focus(?: on)?)\b.*?\bevent\s+" + _EVENT_ID
    )),
    ("describe_event", re.compile(r"\bevent\s+" + _EVENT_ID + r"\b.*\b(?:details?|explanation)\b")),
    ("show_sensors_by_owner", re.compile(
        r"\b(?:sensors?|view|map)\b.*\b" + _OWNER_WORDS + r"\b|\b" + _OWNER_WORDS + r"\b.*\bsensors?\b"
    )),
    ("show_sensors_by_type", re.compile(
        r"\b(?:sensors?|view|map)\b.*\b" + _TYPE_WORDS + r"\b|\b" + _TYPE_WORDS + r"\b.*\bsensors?\b"
    )),
    ("set_palette_accessible", re.compile(
        r"\b(?:colou?r[- ]?blind|accessible|accessibility)\b")),
    ("set_palette_default", re.compile(
        r"\b(?:default|normal|standard|usual)\b.*\b(?:palette|colou?rs?)\b"
        r"|\b(?:palette|colou?rs?)\b.*\b(?:default|normal|standard)\b")),
    ("filter_events_level", re.compile(
        r"\b(?:filter|show|display)\b.*?\b(?P<level>" + _LEVELS + r")\b.*\bevents?\b"
        r"|\bfilter\b.*\bevents?\b.*\blevel\s+(?P<level2>" + _LEVELS + r")\b")),
    ("filter_events_type", re.compile(
        r"\b(?:filter|show|display)\s+(?:only\s+)?(?P<etype>[a-z0-9_]+)\s+events?\b"
        r"|\bfilter\b.*\bevents?\b.*\btype\s+(?P<etype2>[a-z0-9_]+)\b")),
    ("show_timeline", re.compile(
        r"\btimeline\b(?:.*\blast\s+(?P<amount>\d+)\s*(?P<unit>seconds?|minutes?|hours?)\b)?")),
]

_UNIT_MS = {"second": 1000, "minute": 60_000, "hour": 3_600_000}

# Words that never form an event type in filter matching.
_FILTER_STOPWORDS = {"me", "all", "the", "only", "by", "sensors", "sensor", "new"}


def interpret(utterance: str) -> Intent:
    """Map an analyst utterance to an Intent; unknown carries the raw text."""
    text = utterance.strip().lower()
    if not text:
        return Intent(kind="unknown", args={"utterance": utterance})
    for kind, pattern in _MATCHERS:
        m = pattern.search(text)
        if not m:
            continue
        if kind == "help":
            return Intent(kind="help")
        if kind == "describe_event":
            return Intent(kind="describe_event", args={"id": m.group("id")})
        if kind == "show_sensors_by_owner":
            return Intent(kind="show_sensors_by", args={"view": "owner"})
        if kind == "show_sensors_by_type":
            return Intent(kind="show_sensors_by", args={"view": "type"})
        if kind == "set_palette_accessible":
            return Intent(kind="set_palette", args={"palette": "accessible"})
        if kind == "set_palette_default":
            return Intent(kind="set_palette", args={"palette": "default"})
        if kind == "filter_events_level":
            level = (m.groupdict().get("level") or m.groupdict().get("level2") or "").replace(" ", "_")
            return Intent(kind="filter_events", args={"by": "level", "value": level})
        if kind == "filter_events_type":
            etype = m.groupdict().get("etype") or m.groupdict().get("etype2") or ""
            if etype in _FILTER_STOPWORDS:
                continue
            return Intent(kind="filter_events", args={"by": "type", "value": etype})
        if kind == "show_timeline":
            amount = m.groupdict().get("amount")
            if amount:
                unit = (m.groupdict().get("unit") or "minute").rstrip("s")
                return Intent(kind="show_timeline", args={"last_ms": int(amount) * _UNIT_MS[unit]})
            return Intent(kind="show_timeline", args={})
    return Intent(kind="unknown", args={"utterance": utterance})


@dataclass(frozen=True)
class CuiResponse:
    reply: str
    directive: UiDirective
    session: Session

    def to_dict(self) -> dict[str, Any]:
        return {"reply": self.reply, "directive": self.directive.to_dict()}


def execute(intent: Intent, session: Session, analytics: Optional[Analytics] = None) -> CuiResponse:
    """Apply an intent to the session; every intent yields exactly one directive."""
    if intent.kind == "help":
        return CuiResponse(HELP_TEXT, NONE_DIRECTIVE, session)

    if intent.kind == "show_sensors_by":
        view = intent.args["view"]
        return CuiResponse(
            f"Showing sensors by {view}.",
            UiDirective(op="set_sensor_view", args={"view": view}),
            replace(session, sensor_view=view),
        )

    if intent.kind == "set_palette":
        palette = intent.args["palette"]
        name = "accessible" if palette == "accessible" else "default"
        return CuiResponse(
            f"Switched to the {name} palette.",
            UiDirective(op="set_palette", args={"palette": palette}),
            replace(session, palette=palette),
        )

    if intent.kind == "filter_events":
        by, value = intent.args["by"], intent.args["value"]
        return CuiResponse(
            f"Filtering events by {by}: {value}.",
            UiDirective(op="set_filter", args={"by": by, "value": value}),
            replace(session, filter={"by": by, "value": value}),
        )

    if intent.kind == "describe_event":
        event_id = intent.args["id"]
        if analytics is None:
            return CuiResponse("Event details are unavailable here.", NONE_DIRECTIVE, session)
        try:
            detail = analytics.event_detail(event_id)
        except NotFoundError:
            return CuiResponse(f"No such event: {event_id}.", NONE_DIRECTIVE, session)
        if detail.kind == "simple":
            reply = f"Event {event_id}: {detail.event.event_type} at confidence {detail.event.confidence:.2f}."
        else:
            reply = (
                f"Complex event {event_id}: {detail.event.fluent} at probability "
                f"{detail.event.probability:.2f} with {len(detail.constituents)} constituents."
            )
        return CuiResponse(
            reply,
            UiDirective(op="focus_event", args={"id": event_id}),
            replace(session, focused_event=event_id),
        )

    if intent.kind == "show_timeline":
        args = dict(intent.args)
        return CuiResponse(
            "Showing the event timeline.",
            UiDirective(op="show_timeline", args=args),
            session,
        )

    raw = intent.args.get("utterance", "")
    return CuiResponse(
        f"Sorry, I did not understand {raw!r}. Try 'help' for a list of commands.",
        NONE_DIRECTIVE,
        session,
    )
