// Console-side gateway client. The transport is injectable so tests can feed
// frames without a live socket; the browser entry point hands in a WebSocket.

import type { Envelope, UiDirective, ViewState } from './types.js';
import { applyDirective, viewStateFromSnapshot } from './state.js';
import { INITIAL_VIEW_STATE } from './types.js';
import { applyEnvelope, emptyWorld, knownEventIds, type WorldModel } from './log.js';

export interface Transport {
  send(text: string): void;
  close(): void;
}

export interface ClientEvents {
  onChange?: (client: ConsoleClient) => void;
  onReply?: (reply: string) => void;
  onToast?: (message: string) => void;
}

export class ConsoleClient {
  world: WorldModel = emptyWorld();
  view: ViewState = { ...INITIAL_VIEW_STATE };
  private nextSeq = 1;
  private readonly transport: Transport;
  private readonly events: ClientEvents;

  constructor(transport: Transport, events: ClientEvents = {}) {
    this.transport = transport;
    this.events = events;
  }

  /** Handle one inbound text frame from `/console`. */
  receive(text: string): void {
    const envelope = JSON.parse(text) as Envelope;
    if (envelope.type === 'control') {
      this.handleControl(envelope);
    } else {
      applyEnvelope(this.world, envelope);
    }
    this.events.onChange?.(this);
  }

  private handleControl(envelope: Envelope): void {
    const op = envelope.payload['op'];
    if (op === 'state') {
      this.view = viewStateFromSnapshot(envelope.payload);
      return;
    }
    if (op === 'cui_result') {
      const reply = envelope.payload['reply'];
      if (typeof reply === 'string') {
        this.events.onReply?.(reply);
      }
      const directive = envelope.payload['directive'] as UiDirective | undefined;
      if (directive) {
        const result = applyDirective(directive, this.view, knownEventIds(this.world));
        this.view = result.state;
        if (result.toast !== null) {
          this.events.onToast?.(result.toast);
        }
      }
      // The server session is authoritative; resync in case it diverged.
      const session = envelope.payload['session'];
      if (session && typeof session === 'object') {
        this.view = viewStateFromSnapshot({ session });
      }
    }
  }

  private send(type: Envelope['type'], payload: Record<string, unknown>): number {
    const seq = this.nextSeq++;
    const envelope: Envelope = { v: 1, type, seq, time_ms: Date.now(), payload };
    this.transport.send(JSON.stringify(envelope));
    return seq;
  }

  /** Send an analyst utterance; the reply arrives as a cui_result envelope. */
  say(utterance: string): number {
    return this.send('control', { op: 'cui', utterance });
  }

  query(kind: string, args: Record<string, unknown> = {}): number {
    return this.send('control', { op: 'query', kind, ...args });
  }

  /** Map clicks round-trip through the CUI so clicks and chat share one state machine. */
  focusEvent(id: string): number {
    return this.say(`describe event ${id}`);
  }

  close(): void {
    this.transport.close();
  }
}
