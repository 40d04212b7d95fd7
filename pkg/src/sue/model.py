"""Shared domain types: sensors, events, belief levels, geometry, explanations.

All types are immutable values with canonical JSON encodings (snake_case
fields, integer-millisecond times, lowercase enum strings). Pure functions
over them live here too: belief classification, great-circle distance,
complex-event region aggregation, and event validation.
"""

from __future__ import annotations

import enum
import json
import math
import re
from dataclasses import dataclass, field, replace
from typing import Any, Mapping, Optional, Sequence

EARTH_RADIUS_M = 6_371_000.0

_PARTNER_RE = re.compile(r"^[A-Z]{2,8}$")


class ValidationError(ValueError):
    """A value violates a domain invariant."""


class BeliefLevel(enum.IntEnum):
    """Four-colour significance classification, ordered weakest to strongest."""

    NOT_SIGNIFICANT = 0
    WEAK = 1
    MEDIUM = 2
    STRONG = 3

    @property
    def wire(self) -> str:
        return self.name.lower()

    @classmethod
    def from_wire(cls, s: str) -> "BeliefLevel":
        try:
            return cls[s.upper()]
        except KeyError:
            raise ValidationError(f"unknown belief level {s!r}") from None


# Default palette: the colour names shown to analysts for each level.
DEFAULT_PALETTE: dict[BeliefLevel, str] = {
    BeliefLevel.STRONG: "red",
    BeliefLevel.MEDIUM: "amber",
    BeliefLevel.WEAK: "yellow",
    BeliefLevel.NOT_SIGNIFICANT: "blue",
}

# Colour-blind-accessible variant (Okabe-Ito hues).
ACCESSIBLE_PALETTE: dict[BeliefLevel, str] = {
    BeliefLevel.STRONG: "#D55E00",
    BeliefLevel.MEDIUM: "#E69F00",
    BeliefLevel.WEAK: "#F0E442",
    BeliefLevel.NOT_SIGNIFICANT: "#0072B2",
}

PALETTES: dict[str, dict[BeliefLevel, str]] = {
    "default": DEFAULT_PALETTE,
    "accessible": ACCESSIBLE_PALETTE,
}


@dataclass(frozen=True)
class BeliefThresholds:
    """Probability cut points for belief classification, lower-bound inclusive."""

    strong: float = 0.8
    medium: float = 0.5
    weak: float = 0.2

    def __post_init__(self) -> None:
        if not (0.0 < self.weak < self.medium < self.strong <= 1.0):
            raise ValidationError(
                f"thresholds must satisfy 0 < weak < medium < strong <= 1, "
                f"got weak={self.weak}, medium={self.medium}, strong={self.strong}"
            )


DEFAULT_THRESHOLDS = BeliefThresholds()


def classify_belief(p: float, thresholds: BeliefThresholds = DEFAULT_THRESHOLDS) -> BeliefLevel:
    """Map a probability to a belief level under the given thresholds."""
    if not (0.0 <= p <= 1.0):
        raise ValidationError(f"probability out of range: {p}")
    if p >= thresholds.strong:
        return BeliefLevel.STRONG
    if p >= thresholds.medium:
        return BeliefLevel.MEDIUM
    if p >= thresholds.weak:
        return BeliefLevel.WEAK
    return BeliefLevel.NOT_SIGNIFICANT


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lat) and -90.0 <= self.lat <= 90.0):
            raise ValidationError(f"latitude out of range: {self.lat}")
        if not (math.isfinite(self.lon) and -180.0 <= self.lon <= 180.0):
            raise ValidationError(f"longitude out of range: {self.lon}")

    def to_dict(self) -> dict[str, float]:
        return {"lat": self.lat, "lon": self.lon}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "GeoPoint":
        return cls(lat=float(d["lat"]), lon=float(d["lon"]))


def great_circle_m(a: GeoPoint, b: GeoPoint) -> float:
    """Haversine distance in meters on a spherical Earth."""
    lat1, lon1 = math.radians(a.lat), math.radians(a.lon)
    lat2, lon2 = math.radians(b.lat), math.radians(b.lon)
    s = (
        math.sin((lat2 - lat1) / 2.0) ** 2
        + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2.0) ** 2
    )
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(s)))


@dataclass(frozen=True)
class PartnerId:
    code: str

    def __post_init__(self) -> None:
        if not _PARTNER_RE.match(self.code):
            raise ValidationError(f"partner code must match [A-Z]{{2,8}}: {self.code!r}")


class SensorKind(str, enum.Enum):
    CAMERA = "camera"
    MICROPHONE = "microphone"
    OTHER = "other"


@dataclass(frozen=True)
class Sensor:
    id: str
    kind: SensorKind
    owner: PartnerId
    position: GeoPoint
    label: str = ""
    # Free-text descriptor for kind == OTHER (e.g. "seismic").
    kind_label: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "kind": self.kind.value,
            "kind_label": self.kind_label,
            "owner": self.owner.code,
            "position": self.position.to_dict(),
            "label": self.label,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Sensor":
        return cls(
            id=str(d["id"]),
            kind=SensorKind(d["kind"]),
            owner=PartnerId(str(d["owner"])),
            position=GeoPoint.from_dict(d["position"]),
            label=str(d.get("label", "")),
            kind_label=str(d.get("kind_label", "")),
        )


class Modality(str, enum.Enum):
    VIDEO = "video"
    AUDIO = "audio"
    MULTIMODAL = "multimodal"
    OTHER = "other"


@dataclass(frozen=True)
class SaliencyFrame:
    time_offset_ms: int
    original_ref: str
    saliency_ref: str


@dataclass(frozen=True)
class TemporalRelevance:
    time_offset_ms: int
    score: float


@dataclass(frozen=True)
class ExplanationPayload:
    """Explanation attached to an event.

    Saliency explanations arrive from external detector services and are
    carried opaquely (media as URIs, never inlined). Symbolic explanations
    carry a reasoner proof trace in wire form.
    """

    kind: str  # "saliency" | "symbolic"
    dominant_modality: Optional[Modality] = None
    modality_scores: Mapping[str, float] = field(default_factory=dict)
    frames: tuple[SaliencyFrame, ...] = ()
    temporal_relevance: tuple[TemporalRelevance, ...] = ()
    trace: Optional[Mapping[str, Any]] = None

    def __post_init__(self) -> None:
        if self.kind not in ("saliency", "symbolic"):
            raise ValidationError(f"unknown explanation kind {self.kind!r}")
        if self.kind == "saliency":
            if not self.modality_scores:
                raise ValidationError("saliency payload needs at least one modality score")
            if any(s < 0 for s in self.modality_scores.values()):
                raise ValidationError("modality scores must be >= 0")
            offsets = [f.time_offset_ms for f in self.frames]
            if offsets != sorted(offsets):
                raise ValidationError("frame time offsets must be non-decreasing")

    def to_dict(self) -> dict[str, Any]:
        if self.kind == "symbolic":
            return {"kind": "symbolic", "trace": dict(self.trace or {})}
        return {
            "kind": "saliency",
            "dominant_modality": self.dominant_modality.value if self.dominant_modality else None,
            "modality_scores": dict(self.modality_scores),
            "frames": [
                {
                    "time_offset_ms": f.time_offset_ms,
                    "original_ref": f.original_ref,
                    "saliency_ref": f.saliency_ref,
                }
                for f in self.frames
            ],
            "temporal_relevance": [
                {"time_offset_ms": t.time_offset_ms, "score": t.score}
                for t in self.temporal_relevance
            ],
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ExplanationPayload":
        kind = d.get("kind")
        if kind == "symbolic":
            return cls(kind="symbolic", trace=dict(d.get("trace") or {}))
        dom = d.get("dominant_modality")
        return cls(
            kind="saliency",
            dominant_modality=Modality(dom) if dom else None,
            modality_scores={str(k): float(v) for k, v in (d.get("modality_scores") or {}).items()},
            frames=tuple(
                SaliencyFrame(int(f["time_offset_ms"]), str(f["original_ref"]), str(f["saliency_ref"]))
                for f in d.get("frames") or ()
            ),
            temporal_relevance=tuple(
                TemporalRelevance(int(t["time_offset_ms"]), float(t["score"]))
                for t in d.get("temporal_relevance") or ()
            ),
        )


@dataclass(frozen=True)
class Uncertainty:
    aleatoric: float
    epistemic: float


@dataclass(frozen=True)
class SimpleEvent:
    """A single-sensor detection: typed, timestamped, geolocated, confidence-weighted.

    Numeric-range invariants are checked by :func:`validate_event`, not the
    constructor, so malformed inbound events can be represented and reported.
    """

    id: str
    event_type: str
    sensor_id: str
    time: int  # ms since epoch
    position: GeoPoint
    region_radius_m: float = 0.0
    confidence: float = 1.0
    modality: Modality = Modality.OTHER
    uncertainty: Optional[Uncertainty] = None
    explanation: Optional[ExplanationPayload] = None

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "id": self.id,
            "event_type": self.event_type,
            "sensor_id": self.sensor_id,
            "time": self.time,
            "position": self.position.to_dict(),
            "region_radius_m": self.region_radius_m,
            "confidence": self.confidence,
            "modality": self.modality.value,
            "uncertainty": (
                {"aleatoric": self.uncertainty.aleatoric, "epistemic": self.uncertainty.epistemic}
                if self.uncertainty
                else None
            ),
            "explanation": self.explanation.to_dict() if self.explanation else None,
        }
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "SimpleEvent":
        unc = d.get("uncertainty")
        expl = d.get("explanation")
        return cls(
            id=str(d["id"]),
            event_type=str(d["event_type"]),
            sensor_id=str(d["sensor_id"]),
            time=int(d["time"]),
            position=GeoPoint.from_dict(d["position"]),
            region_radius_m=float(d.get("region_radius_m", 0.0)),
            confidence=float(d.get("confidence", 1.0)),
            modality=Modality(d.get("modality", "other")),
            uncertainty=Uncertainty(float(unc["aleatoric"]), float(unc["epistemic"])) if unc else None,
            explanation=ExplanationPayload.from_dict(expl) if expl else None,
        )


@dataclass(frozen=True)
class HistoryPoint:
    time_ms: int
    probability: float


@dataclass(frozen=True)
class ComplexEvent:
    """A fluent activation episode: probability series, belief, constituents, region."""

    id: str
    fluent: str
    probability: float
    belief: BeliefLevel
    active_since: int
    last_update: int
    constituents: tuple[str, ...]
    centroid: GeoPoint
    radius_m: float
    trace: str  # reference to the most recent ProofTrace, "<fluent>@<tick>"
    history: tuple[HistoryPoint, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "fluent": self.fluent,
            "probability": self.probability,
            "belief": self.belief.wire,
            "active_since": self.active_since,
            "last_update": self.last_update,
            "constituents": list(self.constituents),
            "centroid": self.centroid.to_dict(),
            "radius_m": self.radius_m,
            "trace": self.trace,
            "history": [{"time_ms": h.time_ms, "probability": h.probability} for h in self.history],
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ComplexEvent":
        return cls(
            id=str(d["id"]),
            fluent=str(d["fluent"]),
            probability=float(d["probability"]),
            belief=BeliefLevel.from_wire(d["belief"]),
            active_since=int(d["active_since"]),
            last_update=int(d["last_update"]),
            constituents=tuple(str(c) for c in d["constituents"]),
            centroid=GeoPoint.from_dict(d["centroid"]),
            radius_m=float(d["radius_m"]),
            trace=str(d["trace"]),
            history=tuple(HistoryPoint(int(h["time_ms"]), float(h["probability"])) for h in d["history"]),
        )


@dataclass(frozen=True)
class Region:
    centroid: GeoPoint
    radius_m: float


def complex_region(constituents: Sequence[SimpleEvent]) -> Region:
    """Aggregate constituent positions into a covering region.

    Centroid is the confidence-weighted mean of positions (equal weights if
    all confidences are zero); radius covers every constituent's own
    uncertainty circle.
    """
    if not constituents:
        raise ValidationError("complex_region requires at least one constituent")
    total = sum(e.confidence for e in constituents)
    if total <= 0.0:
        weights = [1.0 / len(constituents)] * len(constituents)
    else:
        weights = [e.confidence / total for e in constituents]
    lat = sum(w * e.position.lat for w, e in zip(weights, constituents))
    lon = sum(w * e.position.lon for w, e in zip(weights, constituents))
    centroid = GeoPoint(lat, lon)
    radius = max(great_circle_m(centroid, e.position) + e.region_radius_m for e in constituents)
    return Region(centroid=centroid, radius_m=radius)


class SensorRegistry:
    """Sensors known to a deployment, keyed by id."""

    def __init__(self) -> None:
        self._sensors: dict[str, Sensor] = {}

    def register(self, sensor: Sensor) -> None:
        self._sensors[sensor.id] = sensor

    def get(self, sensor_id: str) -> Optional[Sensor]:
        return self._sensors.get(sensor_id)

    def __contains__(self, sensor_id: str) -> bool:
        return sensor_id in self._sensors

    def all(self) -> list[Sensor]:
        return list(self._sensors.values())


def validate_event(e: SimpleEvent, registry: SensorRegistry) -> list[str]:
    """Return all invariant violations for an inbound event (empty list = ok)."""
    violations: list[str] = []
    if e.sensor_id not in registry:
        violations.append(f"unregistered sensor {e.sensor_id!r}")
    if not (0.0 <= e.confidence <= 1.0):
        violations.append("confidence out of range")
    if e.region_radius_m < 0.0:
        violations.append("negative region radius")
    if not (math.isfinite(e.position.lat) and -90.0 <= e.position.lat <= 90.0):
        violations.append("malformed latitude")
    if not (math.isfinite(e.position.lon) and -180.0 <= e.position.lon <= 180.0):
        violations.append("malformed longitude")
    if e.uncertainty is not None:
        if not (0.0 <= e.uncertainty.aleatoric <= 1.0):
            violations.append("aleatoric uncertainty out of range")
        if not (0.0 <= e.uncertainty.epistemic <= 1.0):
            violations.append("epistemic uncertainty out of range")
    if not e.event_type:
        violations.append("empty event type")
    return violations


def canonical_json(obj: Any) -> str:
    """Deterministic JSON: sorted keys, compact separators."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


__all__ = [
    "ACCESSIBLE_PALETTE",
    "BeliefLevel",
    "BeliefThresholds",
    "ComplexEvent",
    "DEFAULT_PALETTE",
    "DEFAULT_THRESHOLDS",
    "EARTH_RADIUS_M",
    "ExplanationPayload",
    "GeoPoint",
    "HistoryPoint",
    "Modality",
    "PALETTES",
    "PartnerId",
    "Region",
    "SaliencyFrame",
    "Sensor",
    "SensorKind",
    "SensorRegistry",
    "SimpleEvent",
    "TemporalRelevance",
    "Uncertainty",
    "ValidationError",
    "canonical_json",
    "classify_belief",
    "complex_region",
    "great_circle_m",
    "validate_event",
]
