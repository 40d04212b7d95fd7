// Wire-format mirrors of the gateway protocol (snake_case, ms times,
// lowercase enum strings) plus the console's own view state.

export interface GeoPoint {
  lat: number;
  lon: number;
}

export type BeliefLevel = 'not_significant' | 'weak' | 'medium' | 'strong';

export type SensorKind = 'camera' | 'microphone' | 'other';

export interface Sensor {
  id: string;
  kind: SensorKind;
  kind_label?: string;
  owner: string;
  position: GeoPoint;
  label: string;
}

export interface SimpleEvent {
  id: string;
  event_type: string;
  sensor_id: string;
  time: number;
  position: GeoPoint;
  region_radius_m: number;
  confidence: number;
  modality: string;
  uncertainty: { aleatoric: number; epistemic: number } | null;
  explanation: ExplanationPayload | null;
}

export interface ExplanationPayload {
  kind: 'saliency' | 'symbolic';
  dominant_modality?: string | null;
  modality_scores?: Record<string, number>;
  frames?: { time_offset_ms: number; original_ref: string; saliency_ref: string }[];
  temporal_relevance?: { time_offset_ms: number; score: number }[];
  trace?: Record<string, unknown>;
}

export interface ComplexEvent {
  id: string;
  fluent: string;
  probability: number;
  belief: BeliefLevel;
  active_since: number;
  last_update: number;
  constituents: string[];
  centroid: GeoPoint;
  radius_m: number;
  trace: string;
  history: { time_ms: number; probability: number }[];
}

export type EnvelopeType =
  | 'sensor_register'
  | 'simple_event'
  | 'complex_event'
  | 'proof_trace'
  | 'control'
  | 'ack'
  | 'error'
  | 'clock';

export interface Envelope {
  v: number;
  type: EnvelopeType;
  seq: number;
  time_ms: number;
  payload: Record<string, unknown>;
}

export interface UiDirective {
  op: 'set_sensor_view' | 'set_palette' | 'set_filter' | 'focus_event' | 'show_timeline' | 'none';
  args: Record<string, unknown>;
}

export type SensorView = 'type' | 'owner';
export type PaletteName = 'default' | 'accessible';

export interface EventFilter {
  by: 'level' | 'type';
  value: string;
}

export interface ViewState {
  sensor_view: SensorView;
  palette: PaletteName;
  filter: EventFilter | null;
  focused_event: string | null;
}

export const INITIAL_VIEW_STATE: ViewState = {
  sensor_view: 'type',
  palette: 'default',
  filter: null,
  focused_event: null,
};

export interface BeliefThresholds {
  strong: number;
  medium: number;
  weak: number;
}

export const DEFAULT_THRESHOLDS: BeliefThresholds = { strong: 0.8, medium: 0.5, weak: 0.2 };

export function classifyBelief(p: number, t: BeliefThresholds = DEFAULT_THRESHOLDS): BeliefLevel {
  if (p >= t.strong) return 'strong';
  if (p >= t.medium) return 'medium';
  if (p >= t.weak) return 'weak';
  return 'not_significant';
}
