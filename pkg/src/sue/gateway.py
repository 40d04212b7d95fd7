"""Service boundary: envelope wire protocol, JSONL scenario replay with a
virtual clock, live WebSocket ingestion, and console fan-out.

Protocol: one JSON envelope per WebSocket text frame,
``{"v":1,"type":...,"seq":N,"time_ms":T,"payload":{...}}``. Producers
connect to ``/ingest`` (every envelope is answered by exactly one ack or
error); consoles subscribe on ``/console`` and additionally issue
control requests (analytics queries, conversational commands).
"""

from __future__ import annotations

import asyncio
import json
import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Iterable, Optional, Union

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .analytics import Analytics
from .cui import Session, execute, interpret
from .engine import DuplicateEventError, Engine, LateEventError, ProofTrace
from .model import (
    BeliefThresholds,
    ComplexEvent,
    DEFAULT_THRESHOLDS,
    Sensor,
    SensorRegistry,
    SimpleEvent,
    ValidationError,
    canonical_json,
    validate_event,
)
from .rules import RuleSet, parse_rules

logger = logging.getLogger(__name__)

PROTOCOL_VERSION = 1
ENVELOPE_TYPES = frozenset(
    {"sensor_register", "simple_event", "complex_event", "proof_trace", "control", "ack", "error", "clock"}
)
DEFAULT_QUEUE_CAPACITY = 1024


class EnvelopeError(ValidationError):
    pass


@dataclass(frozen=True)
class Envelope:
    type: str
    seq: int
    time_ms: int
    payload: dict[str, Any]
    v: int = PROTOCOL_VERSION

    def to_dict(self) -> dict[str, Any]:
        return {"v": self.v, "type": self.type, "seq": self.seq, "time_ms": self.time_ms, "payload": self.payload}

    def to_json(self) -> str:
        return canonical_json(self.to_dict())

    @classmethod
    def from_dict(cls, d: Any) -> "Envelope":
        if not isinstance(d, dict):
            raise EnvelopeError("envelope must be a JSON object")
        if d.get("v") != PROTOCOL_VERSION:
            raise EnvelopeError(f"unsupported protocol version {d.get('v')!r}")
        etype = d.get("type")
        if etype not in ENVELOPE_TYPES:
            raise EnvelopeError(f"unknown envelope type {etype!r}")
        try:
            seq = int(d["seq"])
            time_ms = int(d["time_ms"])
        except (KeyError, TypeError, ValueError):
            raise EnvelopeError("envelope needs integer 'seq' and 'time_ms'") from None
        payload = d.get("payload")
        if not isinstance(payload, dict):
            raise EnvelopeError("envelope 'payload' must be an object")
        return cls(type=etype, seq=seq, time_ms=time_ms, payload=payload)

    @classmethod
    def from_json(cls, text: str) -> "Envelope":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise EnvelopeError(f"malformed JSON: {exc.msg}") from None
        return cls.from_dict(d)


@dataclass(frozen=True)
class ScenarioDiagnostic:
    line: int
    message: str

    def __str__(self) -> str:
        return f"line {self.line}: {self.message}"


class ScenarioError(ValidationError):
    def __init__(self, diagnostics: list[ScenarioDiagnostic]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(str(d) for d in diagnostics))


@dataclass(frozen=True)
class Scenario:
    name: str
    epoch_ms: int
    entries: tuple[tuple[int, Envelope], ...]  # (offset_ms, envelope)


def load_scenario(source: Union[str, bytes, Path], *, name: str = "scenario") -> Scenario:
    """Parse and strictly validate a `.sue.jsonl` scenario.

    The file holds one JSON object per line: an optional first header line
    ``{"name": ..., "epoch_ms": ...}`` followed by entries
    ``{"offset_ms": N, "envelope": {...}}``. Offsets must be non-decreasing
    and every sensor must be registered before its first event. Any
    diagnostic aborts the load.
    """
    if isinstance(source, Path):
        name = source.stem.removesuffix(".sue")
        text = source.read_text(encoding="utf-8")
    elif isinstance(source, bytes):
        text = source.decode("utf-8")
    else:
        text = source

    diagnostics: list[ScenarioDiagnostic] = []
    entries: list[tuple[int, Envelope]] = []
    epoch_ms = 0
    registered: set[str] = set()
    last_offset: Optional[int] = None

    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            diagnostics.append(ScenarioDiagnostic(lineno, f"malformed JSON: {exc.msg}"))
            continue
        if isinstance(obj, dict) and "envelope" not in obj and ("name" in obj or "epoch_ms" in obj):
            if entries:
                diagnostics.append(ScenarioDiagnostic(lineno, "header after first entry"))
                continue
            name = str(obj.get("name", name))
            try:
                epoch_ms = int(obj.get("epoch_ms", 0))
            except (TypeError, ValueError):
                diagnostics.append(ScenarioDiagnostic(lineno, "epoch_ms must be an integer"))
            continue
        if not isinstance(obj, dict) or "offset_ms" not in obj or "envelope" not in obj:
            diagnostics.append(ScenarioDiagnostic(lineno, "entry needs 'offset_ms' and 'envelope'"))
            continue
        try:
            offset = int(obj["offset_ms"])
        except (TypeError, ValueError):
            diagnostics.append(ScenarioDiagnostic(lineno, "offset_ms must be an integer"))
            continue
        if offset < 0:
            diagnostics.append(ScenarioDiagnostic(lineno, "offset_ms must be >= 0"))
            continue
        if last_offset is not None and offset < last_offset:
            diagnostics.append(ScenarioDiagnostic(lineno, f"non-monotone offset at line {lineno}"))
            continue
        try:
            env = Envelope.from_dict(obj["envelope"])
        except EnvelopeError as exc:
            diagnostics.append(ScenarioDiagnostic(lineno, str(exc)))
            continue
        if env.type == "sensor_register":
            try:
                sensor = Sensor.from_dict(env.payload)
                registered.add(sensor.id)
            except (KeyError, ValueError) as exc:
                diagnostics.append(ScenarioDiagnostic(lineno, f"bad sensor payload: {exc}"))
                continue
        elif env.type == "simple_event":
            try:
                event = SimpleEvent.from_dict(env.payload)
            except (KeyError, ValueError) as exc:
                diagnostics.append(ScenarioDiagnostic(lineno, f"bad event payload: {exc}"))
                continue
            if event.sensor_id not in registered:
                diagnostics.append(ScenarioDiagnostic(lineno, f"unregistered sensor at line {lineno}"))
                continue
        elif env.type not in ("control", "clock"):
            diagnostics.append(ScenarioDiagnostic(lineno, f"type {env.type!r} not allowed in scenarios"))
            continue
        last_offset = offset
        entries.append((offset, env))

    if diagnostics:
        raise ScenarioError(diagnostics)
    return Scenario(name=name, epoch_ms=epoch_ms, entries=tuple(entries))


def save_scenario(scenario: Scenario) -> str:
    lines = [canonical_json({"name": scenario.name, "epoch_ms": scenario.epoch_ms})]
    lines.extend(
        canonical_json({"offset_ms": off, "envelope": env.to_dict()})
        for off, env in scenario.entries
    )
    return "\n".join(lines) + "\n"


class GatewayError(Exception):
    pass


class Hub:
    """Engine plus registry plus outbound broadcast stream.

    Single-writer: all ingestion (live or replay) funnels through one Hub;
    outbound envelopes get a producer-side monotone `seq`, so every
    subscriber observes the identical byte stream.
    """

    def __init__(
        self,
        ruleset: RuleSet,
        *,
        thresholds: BeliefThresholds = DEFAULT_THRESHOLDS,
        tick_ms: int = 1000,
        epoch_ms: int = 0,
    ):
        self.registry = SensorRegistry()
        self.engine = Engine(ruleset, thresholds=thresholds, tick_ms=tick_ms, epoch_ms=epoch_ms)
        self.engine.registry = self.registry  # type: ignore[attr-defined]
        self.analytics = Analytics(self.engine)
        self._out_seq = 0

    def _outbound(self, etype: str, time_ms: int, payload: dict[str, Any]) -> Envelope:
        self._out_seq += 1
        return Envelope(type=etype, seq=self._out_seq, time_ms=time_ms, payload=payload)

    def _wrap_outputs(self, outputs: Iterable[Union[ProofTrace, ComplexEvent]]) -> list[Envelope]:
        envs: list[Envelope] = []
        for out in outputs:
            if isinstance(out, ProofTrace):
                tick_start = self.engine.tick_at(out.tick).start_ms
                envs.append(self._outbound("proof_trace", tick_start, out.to_dict()))
            else:
                envs.append(self._outbound("complex_event", out.last_update, out.to_dict()))
        return envs

    def register_sensor(self, payload: dict[str, Any]) -> tuple[Sensor, list[Envelope]]:
        sensor = Sensor.from_dict(payload)
        self.registry.register(sensor)
        return sensor, [self._outbound("sensor_register", self.engine.epoch_ms, sensor.to_dict())]

    def ingest_event(self, payload: dict[str, Any]) -> tuple[list[str], list[Envelope]]:
        """Validate and submit one event; returns (violations, broadcasts)."""
        try:
            event = SimpleEvent.from_dict(payload)
        except (KeyError, TypeError, ValueError) as exc:
            return [f"bad event payload: {exc}"], []
        violations = validate_event(event, self.registry)
        if violations:
            return violations, []
        try:
            self.engine.submit(event)
        except DuplicateEventError:
            return ["duplicate event"], []
        except LateEventError as exc:
            return [str(exc)], []
        return [], [self._outbound("simple_event", event.time, event.to_dict())]

    def advance_to_tick(self, tick: int) -> list[Envelope]:
        if tick < self.engine.next_tick:
            return []
        return self._wrap_outputs(self.engine.advance(tick))

    def advance_to_time(self, time_ms: int) -> list[Envelope]:
        # Only ticks that have fully elapsed are processed.
        return self.advance_to_tick(self.engine.tick_of(time_ms) - 1)

    def reload_rules(self, source: str) -> None:
        self.engine.reload_rules(parse_rules(source))


def deliver_entry(hub: Hub, offset_ms: int, env: Envelope, epoch_ms: int) -> list[Envelope]:
    """Route one scenario entry through the hub at its virtual time.

    Ticks strictly before the entry's tick are processed first, so engine
    output is a function of the entry order alone (never of replay speed).
    """
    t = epoch_ms + offset_ms
    broadcasts = hub.advance_to_tick(hub.engine.tick_of(t) - 1)
    if env.type == "sensor_register":
        _, out = hub.register_sensor(env.payload)
        broadcasts.extend(out)
    elif env.type == "simple_event":
        violations, out = hub.ingest_event(env.payload)
        if violations:
            raise GatewayError(f"invalid scenario event: {'; '.join(violations)}")
        broadcasts.extend(out)
    elif env.type == "control":
        if env.payload.get("op") == "reload_rules":
            hub.reload_rules(str(env.payload.get("source", "")))
    return broadcasts


def replay_collect(hub: Hub, scenario: Scenario) -> list[Envelope]:
    """Run a scenario as fast as possible, collecting every broadcast envelope."""
    out: list[Envelope] = []
    last_offset = 0
    for offset, env in scenario.entries:
        out.extend(deliver_entry(hub, offset, env, scenario.epoch_ms))
        last_offset = offset
    if scenario.entries:
        out.extend(hub.advance_to_tick(hub.engine.tick_of(scenario.epoch_ms + last_offset)))
    return out


async def replay(
    hub: Hub,
    scenario: Scenario,
    *,
    speed: float = 1.0,
    fast: bool = False,
    emit: Optional[Callable[[Envelope], Any]] = None,
) -> list[Envelope]:
    """Replay with the virtual clock: wall-clock gaps are offset gaps / speed.

    With ``fast=True`` order is preserved with no delay. `emit` (may be a
    coroutine function) sees every broadcast envelope as it is produced.
    """
    if speed <= 0:
        raise ValidationError("replay speed must be positive")
    collected: list[Envelope] = []

    async def push(envs: list[Envelope]) -> None:
        for e in envs:
            collected.append(e)
            if emit is not None:
                result = emit(e)
                if asyncio.iscoroutine(result):
                    await result

    virtual = 0
    last_offset = 0
    for offset, env in scenario.entries:
        if not fast and offset > virtual:
            await asyncio.sleep((offset - virtual) / speed / 1000.0)
        virtual = max(virtual, offset)
        await push(deliver_entry(hub, offset, env, scenario.epoch_ms))
        last_offset = offset
    if scenario.entries:
        await push(hub.advance_to_tick(hub.engine.tick_of(scenario.epoch_ms + last_offset)))
    return collected


class Subscriber:
    """Bounded outbound queue for one console; overflow closes the subscriber
    instead of stalling the producer."""

    _CLOSE = object()

    def __init__(self, capacity: int = DEFAULT_QUEUE_CAPACITY):
        self.queue: asyncio.Queue[Any] = asyncio.Queue(maxsize=capacity)
        self.closed = False

    def offer(self, text: str) -> bool:
        if self.closed:
            return False
        try:
            self.queue.put_nowait(text)
            return True
        except asyncio.QueueFull:
            self.closed = True
            # Make room for the close marker so the sender task wakes up.
            try:
                self.queue.get_nowait()
            except asyncio.QueueEmpty:
                pass
            self.queue.put_nowait(self._CLOSE)
            return False

    def close(self) -> None:
        if not self.closed:
            self.closed = True
            try:
                self.queue.put_nowait(self._CLOSE)
            except asyncio.QueueFull:
                pass

    async def next(self) -> Optional[str]:
        item = await self.queue.get()
        if item is self._CLOSE:
            return None
        return item


class Broadcaster:
    """Fan-out of pre-serialized envelopes to subscribed consoles."""

    def __init__(self, capacity: int = DEFAULT_QUEUE_CAPACITY):
        self.capacity = capacity
        self._subs: dict[int, Subscriber] = {}
        self._next_id = 0

    def subscribe(self) -> tuple[int, Subscriber]:
        self._next_id += 1
        sub = Subscriber(self.capacity)
        self._subs[self._next_id] = sub
        return self._next_id, sub

    def unsubscribe(self, sub_id: int) -> None:
        sub = self._subs.pop(sub_id, None)
        if sub is not None:
            sub.close()

    def publish(self, text: str) -> None:
        dropped = [sid for sid, sub in self._subs.items() if not sub.offer(text)]
        for sid in dropped:
            logger.warning("subscriber %d disconnected: queue overflow", sid)
            self._subs.pop(sid, None)

    def publish_envelopes(self, envelopes: Iterable[Envelope]) -> None:
        for env in envelopes:
            self.publish(env.to_json())

    @property
    def subscriber_count(self) -> int:
        return len(self._subs)


class IngestConnection:
    """Per-connection protocol state for `/ingest`: strict seq accounting and
    the one-ack-or-error-per-envelope contract."""

    def __init__(self, hub: Hub, *, now_ms: Callable[[], int] = lambda: int(time.time() * 1000)):
        self.hub = hub
        self.now_ms = now_ms
        self.expected_seq = 1
        self._reply_seq = 0

    def _reply(self, etype: str, payload: dict[str, Any]) -> Envelope:
        self._reply_seq += 1
        return Envelope(type=etype, seq=self._reply_seq, time_ms=self.now_ms(), payload=payload)

    def handle_text(self, text: str) -> tuple[Envelope, list[Envelope]]:
        """Process one inbound frame; returns (reply, broadcasts)."""
        try:
            env = Envelope.from_json(text)
        except EnvelopeError as exc:
            return self._reply("error", {"seq": None, "message": str(exc)}), []

        if env.seq != self.expected_seq:
            return (
                self._reply(
                    "error",
                    {
                        "seq": env.seq,
                        "message": f"seq gap: expected {self.expected_seq}",
                        "expected_seq": self.expected_seq,
                    },
                ),
                [],
            )
        self.expected_seq += 1

        if env.type == "sensor_register":
            try:
                _, broadcasts = self.hub.register_sensor(env.payload)
            except (KeyError, TypeError, ValueError) as exc:
                return self._reply("error", {"seq": env.seq, "message": f"bad sensor payload: {exc}"}), []
            return self._reply("ack", {"seq": env.seq}), broadcasts

        if env.type == "simple_event":
            violations, broadcasts = self.hub.ingest_event(env.payload)
            if violations:
                return (
                    self._reply(
                        "error",
                        {"seq": env.seq, "message": violations[0], "violations": violations},
                    ),
                    [],
                )
            return self._reply("ack", {"seq": env.seq}), broadcasts

        if env.type == "control":
            op = env.payload.get("op")
            if op == "reload_rules":
                try:
                    self.hub.reload_rules(str(env.payload.get("source", "")))
                except ValidationError as exc:
                    return self._reply("error", {"seq": env.seq, "message": str(exc)}), []
                return self._reply("ack", {"seq": env.seq}), []
            return self._reply("error", {"seq": env.seq, "message": f"unsupported control op {op!r}"}), []

        return self._reply("error", {"seq": env.seq, "message": f"unsupported inbound type {env.type!r}"}), []


class ConsoleConnection:
    """Per-console request handling: analytics queries and the conversational
    interface, answered on the same socket that carries broadcasts."""

    def __init__(self, hub: Hub, *, now_ms: Callable[[], int] = lambda: int(time.time() * 1000)):
        self.hub = hub
        self.now_ms = now_ms
        self.session = Session()

    def state_snapshot(self) -> Envelope:
        return Envelope(
            type="control",
            seq=0,
            time_ms=self.now_ms(),
            payload={
                "op": "state",
                "session": self.session.to_dict(),
                "sensors": [s.to_dict() for s in self.hub.registry.all()],
            },
        )

    def handle_text(self, text: str) -> Envelope:
        try:
            env = Envelope.from_json(text)
        except EnvelopeError as exc:
            return Envelope(type="error", seq=0, time_ms=self.now_ms(), payload={"seq": None, "message": str(exc)})
        if env.type != "control":
            return Envelope(
                type="error",
                seq=env.seq,
                time_ms=self.now_ms(),
                payload={"seq": env.seq, "message": "consoles may only send control envelopes"},
            )
        op = env.payload.get("op")
        if op == "cui":
            response = execute(
                interpret(str(env.payload.get("utterance", ""))), self.session, self.hub.analytics
            )
            self.session = response.session
            return Envelope(
                type="control",
                seq=env.seq,
                time_ms=self.now_ms(),
                payload={"op": "cui_result", **response.to_dict(), "session": self.session.to_dict()},
            )
        if op == "query":
            return self._handle_query(env)
        return Envelope(
            type="error",
            seq=env.seq,
            time_ms=self.now_ms(),
            payload={"seq": env.seq, "message": f"unsupported control op {op!r}"},
        )

    def _handle_query(self, env: Envelope) -> Envelope:
        q = env.payload.get("query") or {}
        kind = q.get("kind")
        try:
            if kind == "summary":
                result: dict[str, Any] = self.hub.analytics.summary(int(q["t0"]), int(q["t1"])).to_dict()
            elif kind == "timeline":
                buckets = self.hub.analytics.timeline(int(q["t0"]), int(q["t1"]), int(q["bucket_width_ms"]))
                result = {"buckets": [b.to_dict() for b in buckets]}
            elif kind == "detail":
                result = self.hub.analytics.event_detail(str(q["id"])).to_dict()
            else:
                raise ValidationError(f"unknown query kind {kind!r}")
        except KeyError as exc:
            message = f"not found: {exc.args[0]}" if kind == "detail" else f"missing query field {exc}"
            return Envelope(
                type="error", seq=env.seq, time_ms=self.now_ms(), payload={"seq": env.seq, "message": message}
            )
        except (TypeError, ValueError) as exc:
            return Envelope(
                type="error", seq=env.seq, time_ms=self.now_ms(), payload={"seq": env.seq, "message": str(exc)}
            )
        return Envelope(
            type="control",
            seq=env.seq,
            time_ms=self.now_ms(),
            payload={"op": "query_result", "kind": kind, "result": result},
        )


def create_app(
    hub: Hub,
    *,
    mode: str = "live",
    queue_capacity: int = DEFAULT_QUEUE_CAPACITY,
    tick_interval_s: Optional[float] = None,
):
    """ASGI app exposing `/ingest` and `/console`.

    In live mode a background task advances the engine by wall clock. In
    replay mode the caller drives the hub (see `replay`) and the app only
    serves console subscriptions.
    """
    from contextlib import asynccontextmanager

    async def _ticker() -> None:
        interval = tick_interval_s if tick_interval_s is not None else hub.engine.tick_ms / 2000.0
        while True:
            await asyncio.sleep(interval)
            now = int(time.time() * 1000)
            broadcaster.publish_envelopes(hub.advance_to_time(now))

    @asynccontextmanager
    async def _lifespan(_app):
        ticker_task = asyncio.create_task(_ticker()) if mode == "live" else None
        try:
            yield
        finally:
            if ticker_task is not None:
                ticker_task.cancel()

    app = FastAPI(title="situational understanding gateway", lifespan=_lifespan)
    broadcaster = Broadcaster(capacity=queue_capacity)
    app.state.hub = hub
    app.state.broadcaster = broadcaster

    @app.websocket("/ingest")
    async def ingest_ws(ws: WebSocket) -> None:
        await ws.accept()
        conn = IngestConnection(hub)
        try:
            while True:
                text = await ws.receive_text()
                reply, broadcasts = conn.handle_text(text)
                await ws.send_text(reply.to_json())
                broadcaster.publish_envelopes(broadcasts)
                if mode == "live":
                    broadcaster.publish_envelopes(hub.advance_to_time(int(time.time() * 1000)))
        except WebSocketDisconnect:
            pass

    @app.websocket("/console")
    async def console_ws(ws: WebSocket) -> None:
        await ws.accept()
        conn = ConsoleConnection(hub)
        sub_id, sub = broadcaster.subscribe()
        await ws.send_text(conn.state_snapshot().to_json())

        async def sender() -> None:
            while True:
                text = await sub.next()
                if text is None:
                    await ws.close(code=1013)
                    return
                await ws.send_text(text)

        send_task = asyncio.create_task(sender())
        try:
            while True:
                text = await ws.receive_text()
                # Responses ride the same single-sender queue as broadcasts so
                # the socket never sees concurrent writes.
                sub.offer(conn.handle_text(text).to_json())
        except WebSocketDisconnect:
            pass
        finally:
            broadcaster.unsubscribe(sub_id)
            send_task.cancel()

    return app
