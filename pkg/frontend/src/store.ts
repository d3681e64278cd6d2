/**
 * Session store: the single source of truth the panels render from.
 *
 * Everything displayed originates from a snapshot, a delta, or a trace
 * event; the store never fabricates state. Panel histories live in
 * fixed-capacity ring buffers and the displayed tick never decreases
 * while a connection lasts.
 */
import type { Delta, ServerMessage, Snapshot, TraceEvent } from "./protocol.js";

export const RING_CAPACITY = 500;

export class RingBuffer<T> {
  private items: T[] = [];
  constructor(readonly capacity: number = RING_CAPACITY) {}

  push(item: T): void {
    this.items.push(item);
    if (this.items.length > this.capacity) {
      this.items.splice(0, this.items.length - this.capacity);
    }
  }

  toArray(): readonly T[] {
    return this.items;
  }

  get length(): number {
    return this.items.length;
  }

  last(): T | undefined {
    return this.items[this.items.length - 1];
  }
}

export interface ChatRow {
  msgId: string;
  sender: string;
  text: string;
  tick: number;
}

export interface VmrRow {
  vmrId: string;
  tick: number;
  objects: { instanceId: string; concept: string; x: number; y: number; confidence: number }[];
}

export interface ThoughtRow {
  thoughtId: string;
  tick: number;
  kind: string;
  text: string;
}

export type ConnectionState = "connecting" | "connected" | "retrying" | "closed";

export interface MarkerInfo {
  concept: string;
  x: number;
  y: number;
  lastTick: number;
}

export class SessionStore {
  connection: ConnectionState = "connecting";
  snapshot: Snapshot | null = null;
  tick = 0;
  paused = false;
  speed = 1.0;
  runComplete = false;
  lastError: string | null = null;
  lastAckMsgId: string | null = null;

  chat = new RingBuffer<ChatRow>();
  vmrs = new Map<string, RingBuffer<VmrRow>>();
  thoughts = new Map<string, RingBuffer<ThoughtRow>>();
  eventLog = new RingBuffer<TraceEvent>();
  /** VMR-derived map markers keyed by instance id (ground truth: the trace). */
  markers = new Map<string, MarkerInfo>();

  deltasApplied = 0;
  outOfOrderDropped = 0;
  private listeners = new Set<() => void>();

  onChange(listener: () => void): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  robotIds(): string[] {
    return (this.snapshot?.robots ?? []).map((r) => r.robot_id);
  }

  vmrPanel(robotId: string): RingBuffer<VmrRow> {
    let ring = this.vmrs.get(robotId);
    if (!ring) {
      ring = new RingBuffer<VmrRow>();
      this.vmrs.set(robotId, ring);
    }
    return ring;
  }

  thoughtPanel(robotId: string): RingBuffer<ThoughtRow> {
    let ring = this.thoughts.get(robotId);
    if (!ring) {
      ring = new RingBuffer<ThoughtRow>();
      this.thoughts.set(robotId, ring);
    }
    return ring;
  }

  /** A reconnect replaces any stale view with the fresh snapshot. */
  private reset(): void {
    this.chat = new RingBuffer<ChatRow>();
    this.vmrs = new Map();
    this.thoughts = new Map();
    this.eventLog = new RingBuffer<TraceEvent>();
    this.markers = new Map();
    this.deltasApplied = 0;
    this.outOfOrderDropped = 0;
    this.runComplete = false;
  }

  apply(message: ServerMessage): void {
    switch (message.kind) {
      case "snapshot":
        this.reset();
        this.snapshot = message;
        this.tick = message.tick;
        break;
      case "delta":
        this.applyDelta(message);
        break;
      case "trace_event":
        this.applyTraceEvent(message.event);
        break;
      case "ack":
        if (message.op === "pause") this.paused = true;
        if (message.op === "resume") this.paused = false;
        if (message.msg_id) this.lastAckMsgId = message.msg_id;
        break;
      case "error":
        this.lastError = message.reason;
        break;
    }
    this.notify();
  }

  private applyDelta(delta: Delta): void {
    if (delta.tick < this.tick) {
      // never expected from a well-behaved gateway; keep the view monotonic
      console.warn(`discarding out-of-order delta ${delta.tick} < ${this.tick}`);
      this.outOfOrderDropped += 1;
      return;
    }
    this.tick = delta.tick;
    this.deltasApplied += 1;
    if (!this.snapshot) return;
    const byId = new Map(delta.robots.map((r) => [r.robot_id, r]));
    for (const robot of this.snapshot.robots) {
      const upd = byId.get(robot.robot_id);
      if (upd) Object.assign(robot, upd);
    }
    const objById = new Map(delta.objects.map((o) => [o.instance_id, o]));
    for (const object of this.snapshot.objects) {
      const upd = objById.get(object.instance_id);
      if (upd) Object.assign(object, upd);
    }
  }

  private applyTraceEvent(event: TraceEvent): void {
    this.eventLog.push(event);
    if (event.tick > this.tick) this.tick = event.tick;
    const payload = event.payload as Record<string, any>;
    switch (event.kind) {
      case "chat":
        this.chat.push({
          msgId: String(payload.msg_id ?? ""),
          sender: String(payload.sender ?? event.source),
          text: String(payload.text ?? ""),
          tick: event.tick,
        });
        break;
      case "vmr": {
        const objects = (payload.objects ?? []) as Record<string, any>[];
        this.vmrPanel(event.source).push({
          vmrId: String(payload.vmr_id ?? ""),
          tick: event.tick,
          objects: objects.map((o) => ({
            instanceId: String(o.instance_id),
            concept: String(o.concept),
            x: Number(o.x),
            y: Number(o.y),
            confidence: Number(o.confidence),
          })),
        });
        for (const o of objects) {
          this.markers.set(String(o.instance_id), {
            concept: String(o.concept),
            x: Number(o.x),
            y: Number(o.y),
            lastTick: event.tick,
          });
        }
        break;
      }
      case "thought":
        this.thoughtPanel(event.source).push({
          thoughtId: String(payload.thought_id ?? ""),
          tick: event.tick,
          kind: String(payload.kind ?? ""),
          text: String(payload.rendered_text ?? ""),
        });
        break;
      case "run_complete":
        this.runComplete = true;
        break;
      default:
        break; // command/report/collision/analysis_error stay in the event log
    }
  }
}
