// Browser entry point: wires the gateway client to a Leaflet map (loaded from
// a CDN as the global `L`) and a minimal chat panel. All map content comes
// from renderMarkers, so the on-screen state is a pure function of the
// envelope log and the view state.

import { ConsoleClient } from './client.js';
import { renderMarkers } from './log.js';
import type { Marker } from './markers.js';

interface Config {
  server_url: string;
  tile_url: string;
  attribution: string;
}

// Leaflet is a CDN global; declare just the surface we touch.
declare const L: {
  map(el: string): LeafletMap;
  tileLayer(url: string, opts: { attribution: string }): LeafletLayer;
  layerGroup(): LeafletLayerGroup;
  marker(pos: [number, number], opts?: Record<string, unknown>): LeafletLayer;
  circle(pos: [number, number], opts: Record<string, unknown>): LeafletLayer;
  circleMarker(pos: [number, number], opts: Record<string, unknown>): LeafletLayer;
  polyline(points: [number, number][], opts: Record<string, unknown>): LeafletLayer;
  divIcon(opts: Record<string, unknown>): unknown;
};
interface LeafletMap {
  setView(pos: [number, number], zoom: number): LeafletMap;
}
interface LeafletLayer {
  addTo(target: LeafletMap | LeafletLayerGroup): LeafletLayer;
  bindTooltip(text: string): LeafletLayer;
  on(event: string, fn: () => void): LeafletLayer;
}
interface LeafletLayerGroup {
  addTo(map: LeafletMap): LeafletLayerGroup;
  clearLayers(): void;
}

function drawMarker(marker: Marker, layer: LeafletLayerGroup, client: ConsoleClient): void {
  switch (marker.kind) {
    case 'sensor':
      L.marker([marker.position.lat, marker.position.lon], {
        icon: L.divIcon({ className: `sensor-glyph glyph-${marker.glyph}`, html: marker.glyph }),
      })
        .bindTooltip(marker.label)
        .addTo(layer);
      break;
    case 'event':
      L.circle([marker.position.lat, marker.position.lon], {
        radius: marker.outerRadiusM,
        color: marker.innerColor,
        fill: false,
      }).addTo(layer);
      L.circleMarker([marker.position.lat, marker.position.lon], {
        radius: marker.innerPx,
        color: marker.innerColor,
        fillColor: marker.innerColor,
        fillOpacity: 0.9,
      })
        .on('click', () => client.focusEvent(marker.id))
        .addTo(layer);
      break;
    case 'complex-flag':
      L.marker([marker.position.lat, marker.position.lon], {
        icon: L.divIcon({ className: 'complex-flag', html: marker.glyph }),
      }).addTo(layer);
      break;
    case 'connector':
      L.polyline(
        [
          [marker.from.lat, marker.from.lon],
          [marker.to.lat, marker.to.lon],
        ],
        { color: marker.color, weight: 2 },
      ).addTo(layer);
      break;
  }
}

export async function start(): Promise<void> {
  const config = (await (await fetch('config.json')).json()) as Config;
  const map = L.map('map').setView([51.48, -3.18], 15);
  L.tileLayer(config.tile_url, { attribution: config.attribution }).addTo(map);
  const layer = L.layerGroup().addTo(map);

  const chatLog = document.getElementById('chat-log') as HTMLElement;
  const appendLine = (cls: string, text: string) => {
    const line = document.createElement('div');
    line.className = cls;
    line.textContent = text;
    chatLog.appendChild(line);
    chatLog.scrollTop = chatLog.scrollHeight;
  };

  const socket = new WebSocket(config.server_url);
  const client = new ConsoleClient(
    { send: (t) => socket.send(t), close: () => socket.close() },
    {
      onChange: (c) => {
        layer.clearLayers();
        for (const marker of renderMarkers(c.world, c.view)) {
          drawMarker(marker, layer, c);
        }
      },
      onReply: (reply) => appendLine('chat-reply', reply),
      onToast: (message) => appendLine('chat-toast', message),
    },
  );
  socket.addEventListener('message', (ev) => client.receive(String(ev.data)));
  socket.addEventListener('close', () => appendLine('chat-toast', 'disconnected'));

  const input = document.getElementById('chat-input') as HTMLInputElement;
  input.addEventListener('keydown', (ev) => {
    if (ev.key === 'Enter' && input.value.trim() !== '') {
      appendLine('chat-user', input.value);
      client.say(input.value.trim());
      input.value = '';
    }
  });
}

if (typeof document !== 'undefined' && document.getElementById('map')) {
  void start();
}
