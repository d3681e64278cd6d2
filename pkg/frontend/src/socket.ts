/** WebSocket client with retry; routes parsed frames into the store. */
import { encodeClientMessage, parseServerMessage, type ClientMessage } from "./protocol.js";
import type { SessionStore } from "./store.js";

const RETRY_DELAY_MS = 1500;

export class GatewaySocket {
  private ws: WebSocket | null = null;
  private closedByUser = false;

  constructor(
    private readonly url: string,
    private readonly store: SessionStore,
  ) {}

  connect(): void {
    this.closedByUser = false;
    this.store.connection = this.ws ? "retrying" : "connecting";
    this.ws = new WebSocket(this.url);
    this.ws.onopen = () => {
      this.store.connection = "connected";
    };
    this.ws.onmessage = (ev: MessageEvent) => {
      const message = parseServerMessage(String(ev.data));
      if (message) this.store.apply(message);
    };
    this.ws.onclose = () => {
      this.ws = null;
      if (this.closedByUser) {
        this.store.connection = "closed";
        return;
      }
      this.store.connection = "retrying";
      setTimeout(() => this.connect(), RETRY_DELAY_MS);
    };
    this.ws.onerror = () => {
      // onclose fires next and schedules the retry
    };
  }

  send(message: ClientMessage): boolean {
    if (!this.ws || this.ws.readyState !== WebSocket.OPEN) return false;
    this.ws.send(encodeClientMessage(message));
    return true;
  }

  close(): void {
    this.closedByUser = true;
    this.ws?.close();
  }
}

export function gatewayUrl(decimate = 1): string {
  const proto = location.protocol === "https:" ? "wss" : "ws";
  const host = location.hostname || "127.0.0.1";
  const port = new URLSearchParams(location.search).get("port") ?? "8750";
  return `${proto}://${host}:${port}/ws?decimate=${decimate}`;
}
