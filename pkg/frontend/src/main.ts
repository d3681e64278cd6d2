/** Operator console wiring: one socket, one store, render loop at 10 Hz. */
import { Controls } from "./controls.js";
import { MapView } from "./map.js";
import { ChatPanel, RobotPanels } from "./panels.js";
import { GatewaySocket, gatewayUrl } from "./socket.js";
import { SessionStore } from "./store.js";

const RENDER_INTERVAL_MS = 100; // cap panel redraws regardless of sim speed

function boot(): void {
  const store = new SessionStore();
  const socket = new GatewaySocket(gatewayUrl(), store);

  const canvas = document.getElementById("map") as HTMLCanvasElement;
  const mapView = new MapView(canvas, store);
  const chat = new ChatPanel(document.getElementById("chat")!, store);
  const panels = new RobotPanels(document.getElementById("panels")!, store);
  const controls = new Controls(document.getElementById("controls")!, store, socket);

  let dirty = true;
  store.onChange(() => {
    dirty = true;
  });
  setInterval(() => {
    if (!dirty) return;
    dirty = false;
    mapView.render();
    chat.render();
    panels.render();
    controls.render();
  }, RENDER_INTERVAL_MS);

  socket.connect();
}

boot();
