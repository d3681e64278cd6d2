/**
 * Gateway wire protocol, mirrored from the server's documented schemas.
 * Every WebSocket text message is one JSON object discriminated by `kind`.
 */
import { z } from "zod";

export const RobotPose = z.object({
  robot_id: z.string(),
  x: z.number(),
  y: z.number(),
  heading: z.number().optional(),
  altitude: z.number().optional(),
  battery: z.number().optional(),
  holding: z.string().nullable().optional(),
  kind: z.string().optional(),
});

export const WorldObjectState = z.object({
  instance_id: z.string(),
  concept: z.string().optional(),
  label: z.string().optional(),
  x: z.number(),
  y: z.number(),
  held_by: z.string().nullable().optional(),
});

export const SnapshotMsg = z.object({
  kind: z.literal("snapshot"),
  tick: z.number(),
  map: z.object({
    cell_size: z.number(),
    width: z.number(),
    height: z.number(),
    rows: z.array(z.string()),
  }),
  rooms: z.record(z.string(), z.array(z.number())),
  robots: z.array(RobotPose),
  objects: z.array(WorldObjectState),
  humans: z.array(z.object({ agent_id: z.string(), x: z.number(), y: z.number() })),
  scenario: z.object({
    name: z.string(),
    seed: z.number().nullable(),
    humans: z.array(z.string()),
    tick_rate_hz: z.number().optional(),
  }).passthrough(),
});

export const DeltaMsg = z.object({
  kind: z.literal("delta"),
  tick: z.number(),
  robots: z.array(RobotPose),
  objects: z.array(WorldObjectState),
});

export const TraceEventMsg = z.object({
  kind: z.literal("trace_event"),
  event: z.object({
    kind: z.string(),
    tick: z.number(),
    source: z.string(),
    payload: z.record(z.string(), z.unknown()),
  }).passthrough(),
});

export const AckMsg = z.object({
  kind: z.literal("ack"),
  op: z.string(),
  msg_id: z.string().optional(),
});

export const ErrorMsg = z.object({
  kind: z.literal("error"),
  reason: z.string(),
  op: z.string().optional(),
});

export const ServerMsg = z.discriminatedUnion("kind", [
  SnapshotMsg,
  DeltaMsg,
  TraceEventMsg,
  AckMsg,
  ErrorMsg,
]);

export type Snapshot = z.infer<typeof SnapshotMsg>;
export type Delta = z.infer<typeof DeltaMsg>;
export type TraceEvent = z.infer<typeof TraceEventMsg>["event"];
export type ServerMessage = z.infer<typeof ServerMsg>;

export type ClientMessage =
  | { kind: "utterance"; sender: string; text: string }
  | { kind: "pause" }
  | { kind: "resume" }
  | { kind: "step"; n: number }
  | { kind: "set_speed"; speed: number };

/** Parse one wire line; returns null (with a console warning) on junk. */
export function parseServerMessage(raw: string): ServerMessage | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    console.warn("operator console: dropping non-JSON frame");
    return null;
  }
  const result = ServerMsg.safeParse(data);
  if (!result.success) {
    console.warn("operator console: dropping unrecognized frame", result.error.issues[0]);
    return null;
  }
  return result.data;
}

export function encodeClientMessage(message: ClientMessage): string {
  return JSON.stringify(message);
}
