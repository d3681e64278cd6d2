/**
 * Live end-to-end check against the real Python gateway in serve mode:
 * snapshot-first, pause/step delta contract, chat round trip and the
 * VMR/Thought panel feeds, all through the session store.
 *
 * Set SKIP_GATEWAY_IT=1 to skip (for example when python is unavailable).
 */
import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join, resolve } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import WebSocket from "ws";

import { encodeClientMessage, parseServerMessage, type ClientMessage } from "../src/protocol.js";
import { SessionStore } from "../src/store.js";

const HERE = dirname(fileURLToPath(import.meta.url));
const REPO_ROOT = resolve(HERE, "..", "..");
const SCENARIO = join(REPO_ROOT, "src", "strata", "data", "serve_demo.scenario");
const PORT = 8754;
const SKIP = !!process.env.SKIP_GATEWAY_IT;

let gateway: ChildProcess | null = null;
let ws: WebSocket | null = null;
const store = new SessionStore();
const arrivals: { kind: string; at: number; appliedAt: number }[] = [];

function send(message: ClientMessage): void {
  ws!.send(encodeClientMessage(message));
}

async function waitFor(
  predicate: () => boolean | Promise<boolean>,
  ms: number,
  what: string,
): Promise<void> {
  const deadline = Date.now() + ms;
  while (Date.now() < deadline) {
    if (await predicate()) return;
    await new Promise((r) => setTimeout(r, 25));
  }
  throw new Error(`timed out waiting for ${what}`);
}

describe.skipIf(SKIP)("operator console against a live gateway", () => {
  beforeAll(async () => {
    const trace = join(mkdtempSync(join(tmpdir(), "strata-it-")), "trace.jsonl");
    gateway = spawn(
      "python3",
      ["-m", "strata.gateway.cli", "--scenario", SCENARIO, "--serve", String(PORT),
       "--trace-out", trace],
      { cwd: REPO_ROOT, stdio: ["ignore", "pipe", "pipe"] },
    );
    gateway.stderr?.on("data", (d) => process.stderr.write(`[gateway] ${d}`));
    await waitFor(() => gatewayUp(), 20_000, "gateway /healthz");

    ws = new WebSocket(`ws://127.0.0.1:${PORT}/ws?decimate=1`);
    ws.on("message", (raw) => {
      const at = Date.now();
      const message = parseServerMessage(raw.toString());
      if (!message) return;
      store.apply(message);
      arrivals.push({ kind: message.kind, at, appliedAt: Date.now() });
    });
    await waitFor(() => store.snapshot !== null, 10_000, "snapshot");
  }, 40_000);

  afterAll(() => {
    ws?.close();
    gateway?.kill("SIGKILL");
  });

  it("receives the snapshot before any delta and renders robot poses", () => {
    expect(arrivals[0]?.kind).toBe("snapshot");
    const ids = store.robotIds();
    expect(ids).toContain("rover");
    expect(ids).toContain("skye");
    expect(store.snapshot!.map.rows.length).toBeGreaterThan(0);
  });

  it("pause then step(3) emits exactly three tick deltas", async () => {
    send({ kind: "pause" });
    await waitFor(() => store.paused, 5_000, "pause ack");
    await new Promise((r) => setTimeout(r, 300)); // drain in-flight deltas
    const before = store.deltasApplied;
    const tickBefore = store.tick;
    send({ kind: "step", n: 3 });
    await waitFor(() => store.deltasApplied >= before + 3, 5_000, "3 step deltas");
    await new Promise((r) => setTimeout(r, 300)); // confirm nothing extra arrives
    expect(store.deltasApplied).toBe(before + 3);
    expect(store.tick).toBe(tickBefore + 3);
  }, 15_000);

  it("chat round trip: the message and a robot reply reach the panel", async () => {
    send({ kind: "set_speed", speed: 10 });
    send({ kind: "resume" });
    await waitFor(() => !store.paused, 5_000, "resume ack");
    send({ kind: "utterance", sender: "danny", text: "Find my keys" });
    await waitFor(() => store.lastAckMsgId !== null, 5_000, "utterance ack");
    await waitFor(
      () => store.chat.toArray().some((r) => r.sender === "danny" && r.text === "Find my keys"),
      10_000,
      "danny's chat echo",
    );
    await waitFor(
      () => store.chat.toArray().some((r) => r.sender !== "danny"),
      10_000,
      "a robot reply",
    );
    // panel rows appear within 1s of their trace events arriving
    for (const sample of arrivals.filter((a) => a.kind === "trace_event")) {
      expect(sample.appliedAt - sample.at).toBeLessThan(1000);
    }
    const reply = store.chat.toArray().find((r) => r.sender !== "danny");
    expect(reply?.text ?? "").toMatch(/searching for the keys/i);
  }, 30_000);

  it("VMR and Thought panels fill from the live trace", async () => {
    await waitFor(
      () => store.robotIds().some((rid) => store.vmrPanel(rid).length > 0),
      20_000,
      "a VMR row",
    );
    await waitFor(
      () => store.robotIds().some((rid) => store.thoughtPanel(rid).length > 0),
      20_000,
      "a thought row",
    );
    const withThoughts = store.robotIds().filter((rid) => store.thoughtPanel(rid).length > 0);
    expect(withThoughts.length).toBeGreaterThan(0);
  }, 45_000);
});

async function gatewayUp(): Promise<boolean> {
  try {
    const response = await fetch(`http://127.0.0.1:${PORT}/healthz`);
    return response.ok;
  } catch {
    return false;
  }
}
