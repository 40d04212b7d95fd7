// Marker descriptions: plain data consumed by the Leaflet layer and by the
// snapshot tests. Rendering stays a pure function of events + view state.

import type {
  BeliefLevel,
  ComplexEvent,
  GeoPoint,
  PaletteName,
  Sensor,
  SensorView,
  SimpleEvent,
} from './types.js';
import { classifyBelief } from './types.js';

export const INNER_CIRCLE_PX = 12;
export const CONNECTOR_COLOR = 'red';

export const PALETTES: Record<PaletteName, Record<BeliefLevel, string>> = {
  default: {
    strong: 'red',
    medium: 'amber',
    weak: 'yellow',
    not_significant: 'blue',
  },
  accessible: {
    strong: '#D55E00',
    medium: '#E69F00',
    weak: '#F0E442',
    not_significant: '#0072B2',
  },
};

const KIND_GLYPHS: Record<string, string> = {
  camera: 'camera',
  microphone: 'microphone',
};

// Partner codes with bundled flag artwork; anything else gets the neutral glyph.
const KNOWN_FLAGS = new Set(['US', 'UK', 'USA', 'GBR', 'FR', 'DE', 'CA', 'AU', 'NL', 'NO']);

export interface SensorMarker {
  kind: 'sensor';
  id: string;
  position: GeoPoint;
  glyph: string;
  label: string;
}

export interface EventMarker {
  kind: 'event';
  id: string;
  complex: boolean;
  position: GeoPoint;
  outerRadiusM: number;
  innerPx: number;
  innerColor: string;
  belief: BeliefLevel;
}

export interface ComplexFlagMarker {
  kind: 'complex-flag';
  id: string;
  position: GeoPoint;
  glyph: '!';
}

export interface ConnectorLine {
  kind: 'connector';
  complexId: string;
  from: GeoPoint;
  to: GeoPoint;
  color: string;
}

export type Marker = SensorMarker | EventMarker | ComplexFlagMarker | ConnectorLine;

export function renderSensorMarker(sensor: Sensor, view: SensorView): SensorMarker {
  if (view === 'owner') {
    const known = KNOWN_FLAGS.has(sensor.owner);
    return {
      kind: 'sensor',
      id: sensor.id,
      position: sensor.position,
      glyph: known ? `flag:${sensor.owner}` : 'flag:neutral',
      label: known ? sensor.label : `${sensor.owner} ${sensor.label}`.trim(),
    };
  }
  const glyph = KIND_GLYPHS[sensor.kind] ?? 'other';
  return { kind: 'sensor', id: sensor.id, position: sensor.position, glyph, label: sensor.label };
}

export function renderSimpleEventMarker(event: SimpleEvent, palette: PaletteName): EventMarker {
  const belief = classifyBelief(event.confidence);
  return {
    kind: 'event',
    id: event.id,
    complex: false,
    position: event.position,
    outerRadiusM: event.region_radius_m,
    innerPx: INNER_CIRCLE_PX,
    innerColor: PALETTES[palette][belief],
    belief,
  };
}

export function renderComplexEventMarkers(
  event: ComplexEvent,
  palette: PaletteName,
  constituentPositions: Map<string, GeoPoint>,
): Marker[] {
  const markers: Marker[] = [
    {
      kind: 'event',
      id: event.id,
      complex: true,
      position: event.centroid,
      outerRadiusM: event.radius_m,
      innerPx: INNER_CIRCLE_PX,
      innerColor: PALETTES[palette][event.belief],
      belief: event.belief,
    },
    { kind: 'complex-flag', id: event.id, position: event.centroid, glyph: '!' },
  ];
  for (const constituentId of event.constituents) {
    const to = constituentPositions.get(constituentId);
    if (to) {
      markers.push({
        kind: 'connector',
        complexId: event.id,
        from: event.centroid,
        to,
        color: CONNECTOR_COLOR,
      });
    }
  }
  return markers;
}
