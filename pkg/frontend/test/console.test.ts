// End-to-end checks against a captured shooting-scenario envelope log:
// the rendered marker set, its purity in the log + view state, and the
// client's handling of server frames.

import { readFileSync } from 'node:fs';
import { fileURLToPath } from 'node:url';

import { describe, expect, it } from 'vitest';

import { ConsoleClient, type Transport } from '../src/client.js';
import { buildWorld, knownEventIds, renderMarkers } from '../src/log.js';
import { PALETTES } from '../src/markers.js';
import { INITIAL_VIEW_STATE, type Envelope, type ViewState } from '../src/types.js';

const fixturePath = fileURLToPath(new URL('./fixtures/shooting_log.json', import.meta.url));
const shootingLog = JSON.parse(readFileSync(fixturePath, 'utf-8')) as Envelope[];

/** The log up to the first complex-event emission, while the belief is medium. */
const activeLog = shootingLog.slice(0, 6);

describe('shooting scenario marker set', () => {
  const world = buildWorld(activeLog);
  const markers = renderMarkers(world, INITIAL_VIEW_STATE);

  it('contains exactly one "!" marker for the complex event', () => {
    const flags = markers.filter((m) => m.kind === 'complex-flag');
    expect(flags).toHaveLength(1);
    expect(flags[0].kind === 'complex-flag' && flags[0].glyph).toBe('!');
  });

  it('draws red connector lines to both constituents', () => {
    const lines = markers.filter((m) => m.kind === 'connector');
    expect(lines).toHaveLength(2);
    const targets = new Set<string>();
    for (const line of lines) {
      if (line.kind === 'connector') {
        expect(line.color).toBe('red');
        for (const ev of world.simpleEvents.values()) {
          if (ev.position.lat === line.to.lat && ev.position.lon === line.to.lon) {
            targets.add(ev.id);
          }
        }
      }
    }
    expect(targets).toEqual(new Set(['ev-gunshot', 'ev-sighting']));
  });

  it('colours every inner circle by its belief level', () => {
    const circles = markers.filter((m) => m.kind === 'event');
    expect(circles.length).toBeGreaterThan(0);
    for (const circle of circles) {
      if (circle.kind === 'event') {
        expect(circle.innerPx).toBe(12);
        expect(circle.innerColor).toBe(PALETTES.default[circle.belief]);
      }
    }
    const complex = circles.find((m) => m.kind === 'event' && m.complex);
    expect(complex && complex.kind === 'event' && complex.belief).toBe('medium');
    expect(complex && complex.kind === 'event' && complex.innerColor).toBe('amber');
  });

  it('palette toggle recolours markers without changing belief levels', () => {
    const accessible: ViewState = { ...INITIAL_VIEW_STATE, palette: 'accessible' };
    const recoloured = renderMarkers(world, accessible);
    expect(recoloured).toHaveLength(markers.length);
    for (let i = 0; i < markers.length; i += 1) {
      const before = markers[i];
      const after = recoloured[i];
      if (before.kind === 'event' && after.kind === 'event') {
        expect(after.belief).toBe(before.belief);
        expect(after.position).toEqual(before.position);
        expect(after.innerColor).toBe(PALETTES.accessible[before.belief]);
      } else {
        expect(after).toEqual(before);
      }
    }
  });

  it('matches the marker-description snapshot', () => {
    expect(markers).toMatchSnapshot();
  });
});

describe('marker set purity', () => {
  it('replaying the same log reproduces byte-identical markers', () => {
    const view: ViewState = { ...INITIAL_VIEW_STATE, sensor_view: 'owner', palette: 'accessible' };
    const once = renderMarkers(buildWorld(shootingLog), view);
    const twice = renderMarkers(buildWorld(shootingLog), view);
    expect(JSON.stringify(twice)).toBe(JSON.stringify(once));
  });

  it('keeps only the latest snapshot per complex event id', () => {
    const world = buildWorld(shootingLog);
    expect(world.complexEvents.size).toBe(1);
    const final = world.complexEvents.get('ce-shooting-1');
    expect(final?.belief).toBe('not_significant');
    expect(final?.history).toHaveLength(2);
  });

  it('applies a type filter to event markers only', () => {
    const view: ViewState = { ...INITIAL_VIEW_STATE, filter: { by: 'type', value: 'gunshot' } };
    const markers = renderMarkers(buildWorld(activeLog), view);
    const eventIds = markers.filter((m) => m.kind === 'event').map((m) => m.kind === 'event' && m.id);
    expect(eventIds).toEqual(['ev-gunshot']);
    expect(markers.filter((m) => m.kind === 'sensor')).toHaveLength(2);
  });
});

describe('console client', () => {
  function makeClient() {
    const sent: Envelope[] = [];
    const transport: Transport = {
      send: (text) => sent.push(JSON.parse(text) as Envelope),
      close: () => undefined,
    };
    const replies: string[] = [];
    const toasts: string[] = [];
    const client = new ConsoleClient(transport, {
      onReply: (r) => replies.push(r),
      onToast: (t) => toasts.push(t),
    });
    return { client, sent, replies, toasts };
  }

  it('accumulates broadcast envelopes into the world model', () => {
    const { client } = makeClient();
    for (const envelope of activeLog) {
      client.receive(JSON.stringify(envelope));
    }
    expect(client.world.sensors.size).toBe(2);
    expect(knownEventIds(client.world)).toEqual(new Set(['ev-gunshot', 'ev-sighting', 'ce-shooting-1']));
  });

  it('restores view state from the connect-time snapshot', () => {
    const { client } = makeClient();
    client.receive(
      JSON.stringify({
        v: 1,
        type: 'control',
        seq: 0,
        time_ms: 0,
        payload: {
          op: 'state',
          session: { sensor_view: 'owner', palette: 'accessible', filter: null, focused_event: null },
        },
      }),
    );
    expect(client.view.sensor_view).toBe('owner');
    expect(client.view.palette).toBe('accessible');
  });

  it('sends cui envelopes with strictly increasing seq', () => {
    const { client, sent } = makeClient();
    client.say('help');
    client.say('use the accessible palette');
    expect(sent.map((e) => e.seq)).toEqual([1, 2]);
    expect(sent[0].payload).toEqual({ op: 'cui', utterance: 'help' });
  });

  it('applies cui_result directives and surfaces the reply', () => {
    const { client, replies } = makeClient();
    client.receive(
      JSON.stringify({
        v: 1,
        type: 'control',
        seq: 1,
        time_ms: 0,
        payload: {
          op: 'cui_result',
          reply: 'Switched to the accessible palette.',
          directive: { op: 'set_palette', args: { palette: 'accessible' } },
          session: { sensor_view: 'type', palette: 'accessible', filter: null, focused_event: null },
        },
      }),
    );
    expect(replies).toEqual(['Switched to the accessible palette.']);
    expect(client.view.palette).toBe('accessible');
  });

  it('toasts without changing state when a directive names a missing event', () => {
    const { client, toasts } = makeClient();
    client.receive(
      JSON.stringify({
        v: 1,
        type: 'control',
        seq: 1,
        time_ms: 0,
        payload: {
          op: 'cui_result',
          reply: 'Focusing ev-ghost.',
          directive: { op: 'focus_event', args: { id: 'ev-ghost' } },
        },
      }),
    );
    expect(toasts).toHaveLength(1);
    expect(toasts[0]).toContain('ev-ghost');
    expect(client.view.focused_event).toBeNull();
  });
});
