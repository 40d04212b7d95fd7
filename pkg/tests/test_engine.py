import random

import pytest

from sue.engine import (
    ClockRegressionError,
    DuplicateEventError,
    Engine,
    FluentState,
    LateEventError,
    OracleBoundError,
    ProofTrace,
    Tick,
    apply_update,
    exact_holds_probability,
    find_groundings,
    tick_update,
)
from sue.model import BeliefLevel, ComplexEvent, GeoPoint, SimpleEvent
from sue.rules import parse_rules

from conftest import SHOOTING_RULES, shooting_events
from generators import random_oracle_scenario


def ev(eid, etype, time, conf, lat=51.48, lon=-3.18):
    return SimpleEvent(
        id=eid, event_type=etype, sensor_id="s", time=time,
        position=GeoPoint(lat, lon), confidence=conf,
    )


def chained_probabilities(ruleset, events, fluent, max_tick, *, tick_ms=1000):
    """Drive tick_update tick by tick; returns the probability after each tick."""
    state = FluentState(fluent=fluent)
    probs = []
    for t in range(max_tick + 1):
        tick = Tick(t, t * tick_ms, tick_ms)
        groundings = [g for g in find_groundings(ruleset, events, tick) if g.rule.fluent == fluent]
        inits = [g for g in groundings if g.rule.kind == "initiates"]
        terms = [g for g in groundings if g.rule.kind == "terminates"]
        state, _ = tick_update(state, inits, terms, tick)
        probs.append(state.prob)
    return probs


class TestFindGroundings:
    def setup_method(self):
        self.rules = parse_rules(SHOOTING_RULES)

    def test_pair_within_windows(self):
        events = [ev("a", "gunshot", 1_000, 0.9), ev("b", "weapon_sighting", 11_000, 0.8, lat=51.4804)]
        tick = Tick(11, 11_000, 1000)
        found = find_groundings(self.rules, events, tick)
        assert len(found) == 1
        assert found[0].occurrence_prob == pytest.approx(0.72)
        assert {e.id for e in found[0].events} == {"a", "b"}

    def test_pair_too_far_apart(self):
        # ~200 m apart exceeds the 150 m window.
        events = [ev("a", "gunshot", 1_000, 0.9), ev("b", "weapon_sighting", 11_000, 0.8, lat=51.4818)]
        assert find_groundings(self.rules, events, Tick(11, 11_000, 1000)) == []

    def test_pair_outside_time_window(self):
        events = [ev("a", "gunshot", 0, 0.9), ev("b", "weapon_sighting", 31_000, 0.8)]
        assert find_groundings(self.rules, events, Tick(31, 31_000, 1000)) == []

    def test_single_pattern(self):
        events = [ev("a", "all_clear", 5_500, 0.6)]
        found = find_groundings(self.rules, events, Tick(5, 5_000, 1000))
        assert len(found) == 1
        assert found[0].occurrence_prob == pytest.approx(0.6)

    def test_anchored_to_latest_event_tick_only(self):
        events = [ev("a", "gunshot", 1_000, 0.9), ev("b", "weapon_sighting", 11_000, 0.8)]
        assert find_groundings(self.rules, events, Tick(1, 1_000, 1000)) == []
        assert len(find_groundings(self.rules, events, Tick(11, 11_000, 1000))) == 1

    def test_confidence_floor_filters(self):
        rules = parse_rules("fluent f\ninitiate f when gunshot(confidence >= 0.5)\n")
        assert find_groundings(rules, [ev("a", "gunshot", 100, 0.4)], Tick(0, 0, 1000)) == []
        assert len(find_groundings(rules, [ev("a", "gunshot", 100, 0.5)], Tick(0, 0, 1000))) == 1

    def test_distinct_events_per_pattern(self):
        rules = parse_rules("fluent f\ninitiate f when ping and ping within 10s, 1km\n")
        one = [ev("a", "ping", 500, 0.5)]
        assert find_groundings(rules, one, Tick(0, 0, 1000)) == []
        two = one + [ev("b", "ping", 600, 0.5)]
        # Both orderings of the two distinct events ground the rule.
        assert len(find_groundings(rules, two, Tick(0, 0, 1000))) == 2


class TestTickUpdate:
    def setup_method(self):
        self.rules = parse_rules(SHOOTING_RULES)
        self.tick = Tick(0, 0, 1000)

    def test_single_init(self):
        # Oracle over the one-event universe gives 0.6.
        rules = parse_rules("fluent f\ninitiate f when spark\n")
        e = ev("a", "spark", 500, 0.6)
        assert exact_holds_probability(rules, [e], "f", 0) == pytest.approx(0.6)
        inits = find_groundings(rules, [e], self.tick)
        state, trace = tick_update(FluentState(fluent="f"), inits, [], self.tick)
        assert state.prob == pytest.approx(0.6, abs=1e-12)
        assert trace.init_prob == pytest.approx(0.6)

    def test_termination(self):
        # Init 0.6 at t0, term 0.5 at t2: holds iff init occurred and term did not.
        rules = parse_rules("fluent f\ninitiate f when spark\nterminate f when water\n")
        events = [ev("a", "spark", 500, 0.6), ev("b", "water", 2_500, 0.5)]
        assert exact_holds_probability(rules, events, "f", 2) == pytest.approx(0.3)
        probs = chained_probabilities(rules, events, "f", 2)
        assert probs[-1] == pytest.approx(0.3, abs=1e-12)

    def test_same_tick_init_and_term(self):
        state = FluentState(fluent="f", prob=0.6)
        rules = parse_rules("fluent f\ninitiate f when spark\nterminate f when water\n")
        events = [ev("a", "spark", 500, 0.6), ev("b", "water", 600, 0.5)]
        inits = [g for g in find_groundings(rules, events, self.tick) if g.rule.kind == "initiates"]
        terms = [g for g in find_groundings(rules, events, self.tick) if g.rule.kind == "terminates"]
        new_state, trace = tick_update(state, inits, terms, self.tick)
        # Initiation dominates termination within the tick.
        assert new_state.prob == pytest.approx(0.6 + 0.4 * 0.6 * 0.5)
        assert trace.prob_after == new_state.prob

    def test_inertia_is_bit_identical(self):
        state = FluentState(fluent="f", prob=0.123456789012345)
        new_state, trace = tick_update(state, [], [], self.tick)
        assert new_state.prob == state.prob
        assert trace.init_prob == 0.0 and trace.term_prob == 0.0

    def test_trace_recomputable(self):
        rules = parse_rules("fluent f\ninitiate f when spark\nterminate f when water\n")
        events = [ev("a", "spark", 100, 0.7), ev("b", "water", 200, 0.4)]
        groundings = find_groundings(rules, events, self.tick)
        inits = [g for g in groundings if g.rule.kind == "initiates"]
        terms = [g for g in groundings if g.rule.kind == "terminates"]
        _, trace = tick_update(FluentState(fluent="f", prob=0.25), inits, terms, self.tick)
        assert apply_update(trace.prob_before, trace.init_prob, trace.term_prob) == trace.prob_after


class TestOracle:
    def test_no_events(self):
        rules = parse_rules("fluent f\ninitiate f when spark\n")
        for t in range(4):
            assert exact_holds_probability(rules, [], "f", t) == 0.0

    def test_event_bound(self):
        rules = parse_rules("fluent f\ninitiate f when spark\n")
        events = [ev(f"e{i}", "spark", 100 + i, 0.5) for i in range(21)]
        with pytest.raises(OracleBoundError):
            exact_holds_probability(rules, events, "f", 0)

    def test_shared_event_worlds_stay_exact(self):
        # One event initiating via two rules: worlds still enumerate exactly,
        # P(holds) = confidence, not the noisy-or of two copies.
        rules = parse_rules("fluent f\ninitiate f when spark\ninitiate f when spark(confidence >= 0.1)\n")
        e = ev("a", "spark", 500, 0.6)
        assert exact_holds_probability(rules, [e], "f", 0) == pytest.approx(0.6)

    def test_agreement_on_seeded_scenarios(self):
        rng = random.Random(42)
        for _ in range(25):
            scenario = random_oracle_scenario(rng, max_events=8)
            for fluent in sorted(scenario.ruleset.fluents):
                chained = chained_probabilities(scenario.ruleset, scenario.events, fluent, scenario.max_tick)
                for t, p in enumerate(chained):
                    exact = exact_holds_probability(scenario.ruleset, scenario.events, fluent, t)
                    assert abs(p - exact) <= 1e-9

    def test_monotone_initiation(self):
        # Adding an init-only event never decreases any later probability.
        rng = random.Random(99)
        rules = parse_rules("fluent f\ninitiate f when spark\nterminate f when water\n")
        for _ in range(30):
            events = [
                ev(f"e{i}", rng.choice(["spark", "water"]), rng.randint(0, 8000), round(rng.uniform(0.1, 1.0), 3))
                for i in range(rng.randint(1, 6))
            ]
            extra = ev("extra", "spark", rng.randint(0, 8000), round(rng.uniform(0.1, 1.0), 3))
            base = chained_probabilities(rules, events, "f", 9)
            more = chained_probabilities(rules, events + [extra], "f", 9)
            extra_tick = extra.time // 1000
            for t in range(extra_tick, 10):
                assert more[t] >= base[t] - 1e-12


class TestEngineAdvance:
    def make_engine(self):
        return Engine(parse_rules(SHOOTING_RULES))

    def test_shooting_scenario(self):
        engine = self.make_engine()
        events = shooting_events()
        for e in events[:2]:
            engine.submit(e)
        outputs = engine.advance(11)
        complexes = [o for o in outputs if isinstance(o, ComplexEvent)]
        assert len(complexes) == 1
        ce = complexes[0]
        assert ce.probability == pytest.approx(0.72)
        assert ce.belief is BeliefLevel.MEDIUM
        assert ce.constituents == ("ev-gunshot", "ev-sighting")
        trace = engine.traces[ce.trace]
        assert apply_update(trace.prob_before, trace.init_prob, trace.term_prob) == trace.prob_after

        engine.submit(events[2])
        outputs = engine.advance(20)
        closures = [o for o in outputs if isinstance(o, ComplexEvent)]
        assert len(closures) == 1
        assert closures[0].probability == 0.0
        assert closures[0].belief is BeliefLevel.NOT_SIGNIFICANT
        assert closures[0].id == ce.id

    def test_no_matching_events_no_complex(self):
        engine = self.make_engine()
        engine.submit(ev("x", "unrelated", 500, 0.99))
        outputs = engine.advance(5)
        assert [o for o in outputs if isinstance(o, ComplexEvent)] == []

    def test_clock_regression(self):
        engine = self.make_engine()
        engine.advance(5)
        with pytest.raises(ClockRegressionError):
            engine.advance(3)

    def test_duplicate_event_rejected(self):
        engine = self.make_engine()
        engine.submit(ev("dup", "gunshot", 500, 0.5))
        with pytest.raises(DuplicateEventError):
            engine.submit(ev("dup", "gunshot", 700, 0.6))

    def test_late_event_beyond_horizon_rejected(self):
        engine = self.make_engine()
        engine.advance(60)
        with pytest.raises(LateEventError) as info:
            engine.submit(ev("old", "gunshot", 500, 0.5))
        assert info.value.event_id == "old"

    def test_late_event_within_horizon_accepted(self):
        engine = self.make_engine()
        engine.advance(3)
        engine.submit(ev("recent", "gunshot", 2_500, 0.5))

    def test_determinism(self):
        def run():
            engine = self.make_engine()
            for e in shooting_events():
                engine.submit(e)
            return [o.to_dict() for o in engine.advance(25)]

        assert run() == run()

    def test_probabilities_stay_in_range(self):
        rng = random.Random(5)
        rules = parse_rules("fluent f\ninitiate f when spark\nterminate f when water\n")
        engine = Engine(rules)
        for i in range(40):
            engine.submit(ev(f"e{i}", rng.choice(["spark", "water"]), rng.randint(0, 30_000), rng.random()))
        engine.advance(35)
        for entry in engine.states["f"].history:
            assert 0.0 <= entry.prob <= 1.0

    def test_new_id_per_activation_episode(self):
        rules = parse_rules("fluent f\ninitiate f when spark\nterminate f when water\n")
        engine = Engine(rules)
        engine.submit(ev("s1", "spark", 500, 0.9))
        engine.submit(ev("w1", "water", 2_500, 1.0))
        engine.submit(ev("s2", "spark", 5_500, 0.9))
        outputs = [o for o in engine.advance(6) if isinstance(o, ComplexEvent)]
        ids = [o.id for o in outputs]
        assert len(outputs) == 3  # creation, closure, re-creation
        assert ids[0] == ids[1]
        assert ids[2] != ids[0]
