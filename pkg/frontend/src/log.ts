// Ordered envelope log → world model → marker set. Everything here is pure:
// replaying the same log with the same ViewState reproduces the same markers.

import type { ComplexEvent, Envelope, Sensor, SimpleEvent, ViewState } from './types.js';
import { classifyBelief } from './types.js';
import {
  type Marker,
  renderComplexEventMarkers,
  renderSensorMarker,
  renderSimpleEventMarker,
} from './markers.js';

export interface WorldModel {
  sensors: Map<string, Sensor>;
  simpleEvents: Map<string, SimpleEvent>;
  /** Latest snapshot per complex-event id, in first-seen order. */
  complexEvents: Map<string, ComplexEvent>;
}

export function emptyWorld(): WorldModel {
  return { sensors: new Map(), simpleEvents: new Map(), complexEvents: new Map() };
}

export function applyEnvelope(world: WorldModel, envelope: Envelope): void {
  switch (envelope.type) {
    case 'sensor_register': {
      const sensor = envelope.payload as unknown as Sensor;
      world.sensors.set(sensor.id, sensor);
      break;
    }
    case 'simple_event': {
      const event = envelope.payload as unknown as SimpleEvent;
      world.simpleEvents.set(event.id, event);
      break;
    }
    case 'complex_event': {
      const event = envelope.payload as unknown as ComplexEvent;
      world.complexEvents.set(event.id, event);
      break;
    }
    default:
      break; // proof_trace, clock, ack, … carry no map state
  }
}

export function buildWorld(log: readonly Envelope[]): WorldModel {
  const world = emptyWorld();
  for (const envelope of log) {
    applyEnvelope(world, envelope);
  }
  return world;
}

export function knownEventIds(world: WorldModel): Set<string> {
  return new Set([...world.simpleEvents.keys(), ...world.complexEvents.keys()]);
}

function passesFilter(view: ViewState, eventType: string, confidence: number): boolean {
  if (view.filter === null) {
    return true;
  }
  if (view.filter.by === 'type') {
    return eventType === view.filter.value;
  }
  return classifyBelief(confidence) === view.filter.value;
}

export function renderMarkers(world: WorldModel, view: ViewState): Marker[] {
  const markers: Marker[] = [];
  for (const sensor of world.sensors.values()) {
    markers.push(renderSensorMarker(sensor, view.sensor_view));
  }
  const positions = new Map(
    [...world.simpleEvents.values()].map((e) => [e.id, e.position] as const),
  );
  for (const event of world.simpleEvents.values()) {
    if (passesFilter(view, event.event_type, event.confidence)) {
      markers.push(renderSimpleEventMarker(event, view.palette));
    }
  }
  for (const event of world.complexEvents.values()) {
    if (passesFilter(view, event.fluent, event.probability)) {
      markers.push(...renderComplexEventMarkers(event, view.palette, positions));
    }
  }
  return markers;
}
