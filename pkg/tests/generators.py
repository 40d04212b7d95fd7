"""Seeded random generators shared by property and acceptance tests."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass

from sue.engine import Tick, find_groundings
from sue.model import GeoPoint, SimpleEvent
from sue.rules import EventPattern, Rule, RuleSet

EVENT_TYPES = [
    "gunshot", "weapon_sighting", "crowd_forming", "vehicle_stop", "alarm",
    "glass_break", "shouting", "all_clear", "smoke", "running",
]

BASE = GeoPoint(51.48, -3.18)
DEG_PER_M_LAT = 1.0 / 111_195.0


def random_ruleset(rng: random.Random, *, max_fluents: int = 3) -> RuleSet:
    n_fluents = rng.randint(1, max_fluents)
    fluents = [f"fluent_{i}" for i in range(n_fluents)]
    rules: list[Rule] = []
    for fluent in fluents:
        for _ in range(rng.randint(1, 2)):
            rules.append(_random_rule(rng, "initiates", fluent))
        if rng.random() < 0.7:
            rules.append(_random_rule(rng, "terminates", fluent))
    return RuleSet(fluents=frozenset(fluents), rules=tuple(rules))


def _random_rule(rng: random.Random, kind: str, fluent: str) -> Rule:
    n_patterns = rng.choice([1, 1, 2])
    types = rng.sample(EVENT_TYPES, n_patterns)
    patterns = tuple(
        EventPattern(
            event_type=t,
            min_confidence=rng.choice([0.0, 0.0, round(rng.uniform(0.05, 0.5), 2)]),
        )
        for t in types
    )
    if n_patterns > 1:
        return Rule(
            kind=kind,
            fluent=fluent,
            patterns=patterns,
            within_ms=rng.choice([5_000, 10_000, 30_000]),
            within_m=rng.choice([100.0, 500.0, 1000.0]),
        )
    return Rule(kind=kind, fluent=fluent, patterns=patterns)


def random_formattable_ruleset(rng: random.Random) -> RuleSet:
    """RuleSet whose numeric values survive the canonical printer exactly."""
    return random_ruleset(rng, max_fluents=4)


def random_events(rng: random.Random, *, max_events: int = 12, horizon_ms: int = 15_000) -> list[SimpleEvent]:
    n = rng.randint(1, max_events)
    events = []
    for i in range(n):
        offset_m = rng.uniform(0.0, 800.0)
        events.append(
            SimpleEvent(
                id=f"ev-{i}",
                event_type=rng.choice(EVENT_TYPES),
                sensor_id="cam-1",
                time=rng.randint(0, horizon_ms),
                position=GeoPoint(BASE.lat + offset_m * DEG_PER_M_LAT, BASE.lon),
                region_radius_m=rng.uniform(0.0, 50.0),
                confidence=round(rng.uniform(0.05, 1.0), 3),
            )
        )
    events.sort(key=lambda e: (e.time, e.id))
    return events


def has_shared_constituents(ruleset: RuleSet, events: list[SimpleEvent], *, tick_ms: int = 1000) -> bool:
    """True when one event feeds two groundings of the same fluent anywhere,
    which breaks the factorization the 1e-9 agreement suite relies on."""
    if not events:
        return False
    max_tick = max(e.time for e in events) // tick_ms
    seen: dict[str, set[str]] = {}
    for t in range(max_tick + 1):
        tick = Tick(t, t * tick_ms, tick_ms)
        for g in find_groundings(ruleset, events, tick):
            used = seen.setdefault(g.rule.fluent, set())
            ids = {e.id for e in g.events}
            if used & ids:
                return True
            used |= ids
    return False


@dataclass(frozen=True)
class OracleScenario:
    ruleset: RuleSet
    events: list[SimpleEvent]
    max_tick: int


def random_oracle_scenario(rng: random.Random, *, max_events: int = 12) -> OracleScenario:
    """Rejection-sample until no event is shared between groundings of one fluent."""
    for _ in range(1000):
        ruleset = random_ruleset(rng)
        events = random_events(rng, max_events=max_events)
        if not has_shared_constituents(ruleset, events):
            max_tick = max(e.time for e in events) // 1000 + 1
            return OracleScenario(ruleset=ruleset, events=events, max_tick=max_tick)
    raise AssertionError("could not generate a collision-free scenario")
