// View-state machine: directives (from CUI replies or map clicks) fold into
// the ViewState. Directives that reference unknown events leave the state
// untouched and surface a toast instead.

import type { UiDirective, ViewState } from './types.js';

export interface DirectiveResult {
  state: ViewState;
  toast: string | null;
}

function str(value: unknown): string | null {
  return typeof value === 'string' ? value : null;
}

export function applyDirective(
  directive: UiDirective,
  state: ViewState,
  knownEventIds: ReadonlySet<string>,
): DirectiveResult {
  switch (directive.op) {
    case 'set_sensor_view': {
      const view = str(directive.args['view']);
      if (view !== 'type' && view !== 'owner') {
        return { state, toast: `unknown sensor view ${String(directive.args['view'])}` };
      }
      return { state: { ...state, sensor_view: view }, toast: null };
    }
    case 'set_palette': {
      const palette = str(directive.args['palette']);
      if (palette !== 'default' && palette !== 'accessible') {
        return { state, toast: `unknown palette ${String(directive.args['palette'])}` };
      }
      return { state: { ...state, palette }, toast: null };
    }
    case 'set_filter': {
      const by = str(directive.args['by']);
      const value = str(directive.args['value']);
      if (by === null && value === null) {
        return { state: { ...state, filter: null }, toast: null };
      }
      if ((by !== 'level' && by !== 'type') || value === null) {
        return { state, toast: 'malformed filter directive' };
      }
      return { state: { ...state, filter: { by, value } }, toast: null };
    }
    case 'focus_event': {
      const id = str(directive.args['id']);
      if (id === null || !knownEventIds.has(id)) {
        return { state, toast: `no such event ${String(directive.args['id'])}` };
      }
      return { state: { ...state, focused_event: id }, toast: null };
    }
    case 'show_timeline':
    case 'none':
      return { state, toast: null };
    default:
      return { state, toast: `unsupported directive ${String((directive as UiDirective).op)}` };
  }
}

/** Restore a ViewState from the server's state-snapshot envelope payload. */
export function viewStateFromSnapshot(payload: Record<string, unknown>): ViewState {
  const session = (payload['session'] ?? payload) as Record<string, unknown>;
  const sensorView = session['sensor_view'];
  const palette = session['palette'];
  const filter = session['filter'] as { by: 'level' | 'type'; value: string } | null | undefined;
  const focused = session['focused_event'];
  return {
    sensor_view: sensorView === 'owner' ? 'owner' : 'type',
    palette: palette === 'accessible' ? 'accessible' : 'default',
    filter: filter && typeof filter === 'object' ? { by: filter.by, value: filter.value } : null,
    focused_event: typeof focused === 'string' ? focused : null,
  };
}
