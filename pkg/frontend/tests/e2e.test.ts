/** End-to-end tests against a real session server.
 *
 * Spawns `python3 -m losbo.cli serve`, drives a scripted 10-trial session
 * through the console's client/controller stack, drives the identical trial
 * sequence through raw fetch calls on a second server, and asserts the two
 * event logs are identical once run identifiers (timestamps, the generated
 * session id) are stripped.
 */

import { spawn, ChildProcess } from "node:child_process";
import { mkdtempSync, readdirSync, readFileSync, rmSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { SessionController } from "../src/controller.js";

const CONFIG = {
  domain: { lower: [-1.0], upper: [1.0] },
  budget: 12,
  batch_size: 1,
  candidate_count: 64,
  fit_restarts: 1,
  fit_iterations: 8,
  seed: 9,
};

const INITIAL = [
  { x: [0.0], y_f: -0.09, y_g: 0.5 },
  { x: [0.1], y_f: -0.04, y_g: 0.4 },
];

/** Deterministic stand-in for the human operator. */
function runTrial(point: number[]): { y_f: number; rating: string } {
  const x = point[0];
  return {
    y_f: -((x - 0.3) ** 2),
    rating: Math.abs(x) <= 0.5 ? "safe" : "unsafe",
  };
}

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const srv = createServer();
    srv.listen(0, "127.0.0.1", () => {
      const address = srv.address();
      if (address === null || typeof address === "string") {
        reject(new Error("no port assigned"));
        return;
      }
      srv.close(() => resolve(address.port));
    });
    srv.on("error", reject);
  });
}

interface Server {
  base: string;
  dataDir: string;
  proc: ChildProcess;
}

const servers: Server[] = [];

async function startServer(): Promise<Server> {
  const dataDir = mkdtempSync(join(tmpdir(), "losbo-e2e-"));
  const port = await freePort();
  const proc = spawn(
    "python3",
    ["-m", "losbo.cli", "serve", "--data-dir", dataDir, "--bind", `127.0.0.1:${port}`],
    { stdio: "ignore" },
  );
  const base = `http://127.0.0.1:${port}`;
  const deadline = Date.now() + 60_000;
  for (;;) {
    try {
      const res = await fetch(`${base}/health`);
      if (res.ok) break;
    } catch {
      /* not up yet */
    }
    if (Date.now() > deadline) throw new Error("server did not come up");
    await new Promise((r) => setTimeout(r, 150));
  }
  const server = { base, dataDir, proc };
  servers.push(server);
  return server;
}

afterAll(() => {
  for (const s of servers) {
    s.proc.kill("SIGTERM");
    rmSync(s.dataDir, { recursive: true, force: true });
  }
});

function readEventLog(dataDir: string): Record<string, unknown>[] {
  const logs = readdirSync(dataDir).filter((f) => f.endsWith(".events.jsonl"));
  expect(logs).toHaveLength(1);
  return readFileSync(join(dataDir, logs[0]), "utf8")
    .trim()
    .split("\n")
    .map((line) => JSON.parse(line));
}

/** Drop per-run identifiers: event timestamps and the generated session id. */
function normalize(events: Record<string, unknown>[]): Record<string, unknown>[] {
  return events.map((event) => {
    const copy = JSON.parse(JSON.stringify(event));
    delete copy.timestamp;
    if (copy.kind === "created") delete copy.payload.session_id;
    return copy;
  });
}

async function rawJson(base: string, method: string, path: string, body?: unknown) {
  const res = await fetch(base + path, {
    method,
    headers: body === undefined ? {} : { "Content-Type": "application/json" },
    body: body === undefined ? undefined : JSON.stringify(body),
  });
  if (!res.ok) throw new Error(`${method} ${path} -> ${res.status}`);
  return res.json();
}

describe("console against a live server", () => {
  it(
    "a scripted 10-trial UI session logs exactly what the raw API logs",
    async () => {
      // --- UI path: the console's own client + controller ---
      const uiServer = await startServer();
      const api = new ApiClient(uiServer.base);
      const created = await api.createSession(CONFIG, INITIAL);
      const controller = new SessionController(api, created.session_id);

      for (let trial = 0; trial < 10; trial++) {
        const proposal = await controller.fetchProposal();
        expect(proposal.points).toHaveLength(1);
        const outcome = await controller.submitObservation(
          [runTrial(proposal.points[0])],
          proposal.iteration,
        );
        expect(outcome.accepted).toBe(true);
      }
      const finalState = await api.getState(created.session_id);
      expect(finalState.status).toBe("completed");
      expect(finalState.n_observations).toBe(12);

      // --- raw path: plain fetch, no console code ---
      const rawServer = await startServer();
      const rawCreated = await rawJson(rawServer.base, "POST", "/api/sessions", {
        config: CONFIG,
        initial_observations: INITIAL,
      });
      const sid = rawCreated.session_id;
      for (let trial = 0; trial < 10; trial++) {
        const proposal = await rawJson(
          rawServer.base,
          "GET",
          `/api/sessions/${sid}/proposal`,
        );
        await rawJson(rawServer.base, "POST", `/api/sessions/${sid}/observation`, {
          results: [runTrial(proposal.points[0])],
        });
      }

      const uiLog = normalize(readEventLog(uiServer.dataDir));
      const rawLog = normalize(readEventLog(rawServer.dataDir));
      expect(uiLog).toHaveLength(21); // created + 10 x (proposed, observed)
      expect(uiLog).toEqual(rawLog);
    },
    180_000,
  );

  it(
    "a double-submit produces exactly one observed event",
    async () => {
      const server = await startServer();
      const api = new ApiClient(server.base);
      const created = await api.createSession(CONFIG, INITIAL);
      const controller = new SessionController(api, created.session_id);

      const proposal = await controller.fetchProposal();
      const results = [runTrial(proposal.points[0])];
      const [first, second] = await Promise.all([
        controller.submitObservation(results, proposal.iteration),
        controller.submitObservation(results, proposal.iteration),
      ]);
      expect([first.accepted, second.accepted].sort()).toEqual([false, true]);

      const observed = readEventLog(server.dataDir).filter(
        (event) => event.kind === "observed",
      );
      expect(observed).toHaveLength(1);
      const state = await api.getState(created.session_id);
      expect(state.n_observations).toBe(3);
    },
    120_000,
  );
});
