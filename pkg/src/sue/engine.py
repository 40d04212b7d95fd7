"""Probabilistic event-calculus reasoner.

Fluent probabilities evolve over discrete ticks: rule groundings found in
the event window initiate or terminate fluents, independence across
groundings gives noisy-or combination, and inertia carries probability
between ticks:

    I  = 1 - prod(1 - p_g) over initiating groundings at the tick
    T  = likewise over terminating groundings
    P' = I + (1 - I) * P * (1 - T)

Initiation dominates termination within a tick. The recursion is exact
whenever no event instance feeds two groundings of the same fluent; the
brute-force possible-worlds oracle (`exact_holds_probability`) is exact
always and anchors the test suite.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .model import (
    BeliefLevel,
    BeliefThresholds,
    ComplexEvent,
    DEFAULT_THRESHOLDS,
    HistoryPoint,
    SimpleEvent,
    ValidationError,
    classify_belief,
    complex_region,
    great_circle_m,
)
from .rules import Rule, RuleSet, format_rule

logger = logging.getLogger(__name__)

ORACLE_EVENT_BOUND = 20


class EngineError(Exception):
    pass


class ClockRegressionError(EngineError):
    """advance() was asked to move to an already-processed tick."""


class LateEventError(EngineError):
    def __init__(self, event_id: str, message: str):
        self.event_id = event_id
        super().__init__(message)


class DuplicateEventError(EngineError):
    def __init__(self, event_id: str):
        self.event_id = event_id
        super().__init__(f"duplicate event {event_id!r}")


class OracleBoundError(EngineError):
    """Too many events to enumerate possible worlds."""


@dataclass(frozen=True)
class Tick:
    index: int
    start_ms: int
    width_ms: int = 1000

    @property
    def end_ms(self) -> int:
        return self.start_ms + self.width_ms

    def contains(self, time_ms: int) -> bool:
        return self.start_ms <= time_ms < self.end_ms


@dataclass(frozen=True)
class Grounding:
    rule: Rule
    events: tuple[SimpleEvent, ...]  # one per pattern
    occurrence_prob: float


@dataclass(frozen=True)
class HistoryEntry:
    tick: int
    prob: float
    init_prob: float
    term_prob: float


@dataclass(frozen=True)
class FluentState:
    fluent: str
    prob: float = 0.0
    history: tuple[HistoryEntry, ...] = ()
    active_complex: Optional[str] = None


@dataclass(frozen=True)
class FiredGrounding:
    kind: str
    rule: str
    event_ids: tuple[str, ...]
    occurrence_prob: float


@dataclass(frozen=True)
class ProofTrace:
    """Symbolic record of one fluent-probability update; `prob_after` is
    recomputable from the other fields via `apply_update`."""

    fluent: str
    tick: int
    fired_groundings: tuple[FiredGrounding, ...]
    prob_before: float
    init_prob: float
    term_prob: float
    prob_after: float

    @property
    def ref(self) -> str:
        return f"{self.fluent}@{self.tick}"

    def to_dict(self) -> dict:
        return {
            "fluent": self.fluent,
            "tick": self.tick,
            "fired_groundings": [
                {
                    "kind": g.kind,
                    "rule": g.rule,
                    "event_ids": list(g.event_ids),
                    "occurrence_prob": g.occurrence_prob,
                }
                for g in self.fired_groundings
            ],
            "prob_before": self.prob_before,
            "init_prob": self.init_prob,
            "term_prob": self.term_prob,
            "prob_after": self.prob_after,
        }


def apply_update(prob_before: float, init_prob: float, term_prob: float) -> float:
    """The tick update equation; initiation dominates termination."""
    return init_prob + (1.0 - init_prob) * prob_before * (1.0 - term_prob)


def noisy_or(probs: Iterable[float]) -> float:
    acc = 1.0
    for p in probs:
        acc *= 1.0 - p
    return 1.0 - acc


def find_groundings(rules: RuleSet, window_events: Sequence[SimpleEvent], tick: Tick) -> list[Grounding]:
    """All rule groundings anchored to this tick.

    A grounding binds one distinct event per pattern such that every pair of
    events is within the rule's temporal and spatial windows, every event
    clears its pattern's confidence floor, and the latest bound event falls
    inside the tick (so each grounding fires exactly once).
    """
    out: list[Grounding] = []
    for rule in rules.rules:
        candidates: list[list[SimpleEvent]] = []
        for pattern in rule.patterns:
            matched = [
                e
                for e in window_events
                if e.event_type == pattern.event_type and e.confidence >= pattern.min_confidence
            ]
            candidates.append(matched)
        if any(not c for c in candidates):
            continue
        for combo in itertools.product(*candidates):
            ids = {e.id for e in combo}
            if len(ids) != len(combo):
                continue
            if not tick.contains(max(e.time for e in combo)):
                continue
            if len(combo) > 1:
                ok = True
                for a, b in itertools.combinations(combo, 2):
                    if abs(a.time - b.time) > (rule.within_ms or 0):
                        ok = False
                        break
                    if great_circle_m(a.position, b.position) > (rule.within_m or 0.0):
                        ok = False
                        break
                if not ok:
                    continue
            prob = 1.0
            for e in combo:
                prob *= e.confidence
            out.append(Grounding(rule=rule, events=tuple(combo), occurrence_prob=prob))
    return out


def tick_update(
    state: FluentState,
    inits: Sequence[Grounding],
    terms: Sequence[Grounding],
    tick: Tick,
) -> tuple[FluentState, ProofTrace]:
    """Advance one fluent across one tick given its fired groundings."""
    init_prob = noisy_or(g.occurrence_prob for g in inits)
    term_prob = noisy_or(g.occurrence_prob for g in terms)
    prob_after = apply_update(state.prob, init_prob, term_prob)
    trace = ProofTrace(
        fluent=state.fluent,
        tick=tick.index,
        fired_groundings=tuple(
            FiredGrounding(
                kind=g.rule.kind,
                rule=format_rule(g.rule),
                event_ids=tuple(e.id for e in g.events),
                occurrence_prob=g.occurrence_prob,
            )
            for g in itertools.chain(inits, terms)
        ),
        prob_before=state.prob,
        init_prob=init_prob,
        term_prob=term_prob,
        prob_after=prob_after,
    )
    new_state = replace(
        state,
        prob=prob_after,
        history=state.history + (HistoryEntry(tick.index, prob_after, init_prob, term_prob),),
    )
    return new_state, trace


def exact_holds_probability(
    rules: RuleSet,
    events: Sequence[SimpleEvent],
    fluent: str,
    tick: int,
    *,
    epoch_ms: int = 0,
    width_ms: int = 1000,
) -> float:
    """Brute-force oracle: enumerate every occur/not-occur world.

    In each world events occur deterministically, groundings fire where all
    constituents occur, and the fluent evolves by deterministic event
    calculus with initiation dominance and inertia. Returns the total
    probability of worlds where the fluent holds at the end of `tick`.
    """
    n = len(events)
    if n > ORACLE_EVENT_BOUND:
        raise OracleBoundError(f"{n} events exceeds the enumeration bound of {ORACLE_EVENT_BOUND}")
    index_of = {e.id: i for i, e in enumerate(events)}
    if len(index_of) != n:
        raise ValidationError("duplicate event ids in oracle input")

    worlds = np.arange(2**n, dtype=np.uint64)
    world_prob = np.ones(2**n, dtype=np.float64)
    for i, e in enumerate(events):
        occurs = ((worlds >> np.uint64(i)) & np.uint64(1)).astype(bool)
        world_prob *= np.where(occurs, e.confidence, 1.0 - e.confidence)

    holds = np.zeros(2**n, dtype=bool)
    for t in range(tick + 1):
        tk = Tick(t, epoch_ms + t * width_ms, width_ms)
        init_any = np.zeros(2**n, dtype=bool)
        term_any = np.zeros(2**n, dtype=bool)
        for g in find_groundings(rules, events, tk):
            if g.rule.fluent != fluent:
                continue
            mask = np.uint64(0)
            for e in g.events:
                mask |= np.uint64(1) << np.uint64(index_of[e.id])
            fires = (worlds & mask) == mask
            if g.rule.kind == "initiates":
                init_any |= fires
            else:
                term_any |= fires
        holds = init_any | (holds & ~term_any)
    return float(world_prob[holds].sum())


@dataclass
class ComplexEpisode:
    """Book-keeping for one activation episode of a fluent."""

    id: str
    active_since: int
    constituents: set[str] = field(default_factory=set)
    history: list[HistoryPoint] = field(default_factory=list)
    last_belief: BeliefLevel = BeliefLevel.NOT_SIGNIFICANT
    last_emitted_constituents: frozenset[str] = frozenset()


class Engine:
    """Single-writer reasoning state machine.

    Events are submitted between `advance` calls; `advance` processes ticks
    in order and returns the ProofTraces and ComplexEvent snapshots produced.
    Snapshots are immutable values safe to share.
    """

    def __init__(
        self,
        ruleset: RuleSet,
        *,
        thresholds: BeliefThresholds = DEFAULT_THRESHOLDS,
        tick_ms: int = 1000,
        epoch_ms: int = 0,
    ):
        if tick_ms <= 0:
            raise ValidationError("tick width must be positive")
        self.ruleset = ruleset
        self.thresholds = thresholds
        self.tick_ms = tick_ms
        self.epoch_ms = epoch_ms
        self.next_tick = 0
        self.events: dict[str, SimpleEvent] = {}
        self.states: dict[str, FluentState] = {
            f: FluentState(fluent=f) for f in sorted(ruleset.fluents)
        }
        self.traces: dict[str, ProofTrace] = {}
        self.complex_events: dict[str, ComplexEvent] = {}
        self._episodes: dict[str, ComplexEpisode] = {}
        self._episode_counter = 0
        self._window: list[SimpleEvent] = []

    # Horizon: oldest tick whose events can still join a future grounding.
    @property
    def horizon_ticks(self) -> int:
        return -(-self.ruleset.max_within_ms // self.tick_ms) + 2

    def reload_rules(self, ruleset: RuleSet) -> None:
        """Swap the rule set; fluent states persist where fluents survive."""
        self.ruleset = ruleset
        for f in sorted(ruleset.fluents):
            self.states.setdefault(f, FluentState(fluent=f))

    def tick_of(self, time_ms: int) -> int:
        return (time_ms - self.epoch_ms) // self.tick_ms

    def tick_at(self, index: int) -> Tick:
        return Tick(index, self.epoch_ms + index * self.tick_ms, self.tick_ms)

    def submit(self, event: SimpleEvent) -> None:
        """Accept an event for future ticks; duplicates and stale events are rejected."""
        if event.id in self.events:
            raise DuplicateEventError(event.id)
        idx = self.tick_of(event.time)
        if idx < self.next_tick - self.horizon_ticks:
            raise LateEventError(
                event.id,
                f"event {event.id!r} at tick {idx} is older than the eviction horizon",
            )
        self.events[event.id] = event
        self._window.append(event)

    def advance(self, to_tick: int) -> list[ProofTrace | ComplexEvent]:
        """Process all unprocessed ticks with index <= to_tick, in order."""
        if to_tick < self.next_tick - 1:
            raise ClockRegressionError(
                f"cannot advance to tick {to_tick}; already at {self.next_tick - 1}"
            )
        outputs: list[ProofTrace | ComplexEvent] = []
        for t in range(self.next_tick, to_tick + 1):
            outputs.extend(self._process_tick(self.tick_at(t)))
            self.next_tick = t + 1
        return outputs

    def _process_tick(self, tick: Tick) -> list[ProofTrace | ComplexEvent]:
        horizon_start = tick.index - self.horizon_ticks
        self._window = [e for e in self._window if self.tick_of(e.time) >= horizon_start]
        groundings = find_groundings(self.ruleset, self._window, tick)
        by_fluent: dict[str, tuple[list[Grounding], list[Grounding]]] = {}
        for g in groundings:
            inits, terms = by_fluent.setdefault(g.rule.fluent, ([], []))
            (inits if g.rule.kind == "initiates" else terms).append(g)

        outputs: list[ProofTrace | ComplexEvent] = []
        for fluent in sorted(self.states):
            state = self.states[fluent]
            inits, terms = by_fluent.get(fluent, ([], []))
            new_state, trace = tick_update(state, inits, terms, tick)
            if trace.fired_groundings:
                self.traces[trace.ref] = trace
                outputs.append(trace)
            new_state, snapshot = self._update_episode(new_state, trace, inits, tick)
            self.states[fluent] = new_state
            if snapshot is not None:
                self.complex_events[snapshot.id] = snapshot
                outputs.append(snapshot)
        return outputs

    def _update_episode(
        self,
        state: FluentState,
        trace: ProofTrace,
        inits: Sequence[Grounding],
        tick: Tick,
    ) -> tuple[FluentState, Optional[ComplexEvent]]:
        level = classify_belief(state.prob, self.thresholds)
        episode = self._episodes.get(state.fluent)

        if episode is None:
            if level <= BeliefLevel.NOT_SIGNIFICANT:
                return state, None
            # Activation: constituents reset to this tick's initiating events.
            self._episode_counter += 1
            episode = ComplexEpisode(
                id=f"ce-{state.fluent}-{self._episode_counter}",
                active_since=tick.start_ms,
            )
            for g in inits:
                episode.constituents.update(e.id for e in g.events)
            episode.history.append(HistoryPoint(tick.start_ms, state.prob))
            episode.last_belief = level
            episode.last_emitted_constituents = frozenset(episode.constituents)
            self._episodes[state.fluent] = episode
            snapshot = self._snapshot(state, episode, trace, tick)
            return replace(state, active_complex=episode.id), snapshot

        # Active episode: accumulate constituents, track history.
        for g in inits:
            episode.constituents.update(e.id for e in g.events)
        episode.history.append(HistoryPoint(tick.start_ms, state.prob))

        if level <= BeliefLevel.NOT_SIGNIFICANT:
            episode.last_belief = level
            snapshot = self._snapshot(state, episode, trace, tick)
            del self._episodes[state.fluent]
            return replace(state, active_complex=None), snapshot

        changed = (
            level != episode.last_belief
            or frozenset(episode.constituents) != episode.last_emitted_constituents
        )
        episode.last_belief = level
        if not changed:
            return state, None
        episode.last_emitted_constituents = frozenset(episode.constituents)
        return state, self._snapshot(state, episode, trace, tick)

    def _snapshot(
        self, state: FluentState, episode: ComplexEpisode, trace: ProofTrace, tick: Tick
    ) -> ComplexEvent:
        members = sorted(
            (self.events[i] for i in episode.constituents),
            key=lambda e: (e.time, e.id),
        )
        region = complex_region(members)
        latest_trace = trace.ref if trace.fired_groundings else self._latest_trace_ref(state)
        return ComplexEvent(
            id=episode.id,
            fluent=state.fluent,
            probability=state.prob,
            belief=classify_belief(state.prob, self.thresholds),
            active_since=episode.active_since,
            last_update=tick.start_ms,
            constituents=tuple(e.id for e in members),
            centroid=region.centroid,
            radius_m=region.radius_m,
            trace=latest_trace,
            history=tuple(episode.history),
        )

    def _latest_trace_ref(self, state: FluentState) -> str:
        for entry in reversed(state.history):
            ref = f"{state.fluent}@{entry.tick}"
            if ref in self.traces:
                return ref
        return f"{state.fluent}@-"
