import pytest

from sue.model import GeoPoint, PartnerId, Sensor, SensorKind, SensorRegistry, SimpleEvent
from sue.rules import parse_rules

SHOOTING_RULES = (
    "fluent shooting\n"
    "initiate shooting when gunshot and weapon_sighting within 30s, 150m\n"
    "terminate shooting when all_clear\n"
)


@pytest.fixture
def shooting_ruleset():
    return parse_rules(SHOOTING_RULES)


@pytest.fixture
def registry():
    reg = SensorRegistry()
    reg.register(
        Sensor(
            id="cam-1",
            kind=SensorKind.CAMERA,
            owner=PartnerId("UK"),
            position=GeoPoint(51.48, -3.18),
            label="junction camera",
        )
    )
    reg.register(
        Sensor(
            id="mic-1",
            kind=SensorKind.MICROPHONE,
            owner=PartnerId("US"),
            position=GeoPoint(51.4805, -3.18),
            label="street microphone",
        )
    )
    return reg


def shooting_events():
    """gunshot(0.9) and weapon_sighting(0.8) ~44 m and 10 s apart, then all_clear(1.0)."""
    return [
        SimpleEvent(
            id="ev-gunshot",
            event_type="gunshot",
            sensor_id="mic-1",
            time=1_500,
            position=GeoPoint(51.48, -3.18),
            region_radius_m=30.0,
            confidence=0.9,
        ),
        SimpleEvent(
            id="ev-sighting",
            event_type="weapon_sighting",
            sensor_id="cam-1",
            time=11_500,
            position=GeoPoint(51.4804, -3.18),
            region_radius_m=20.0,
            confidence=0.8,
        ),
        SimpleEvent(
            id="ev-clear",
            event_type="all_clear",
            sensor_id="cam-1",
            time=20_500,
            position=GeoPoint(51.48, -3.18),
            confidence=1.0,
        ),
    ]
