// The two dashboard acceptance criteria, driven by a wire transcript
// recorded from the coordinator's own in-process harness (the Python side
// pins the fixture's shape against the live server in test_ui_fixture.py).

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { JobLiveModel, ReconnectingFeed, type SocketLike } from "../src/live.js";
import type { CrackedRow, JobStats, UiEvent } from "../src/types.js";

const here = dirname(fileURLToPath(import.meta.url));
const fixture = JSON.parse(
  readFileSync(join(here, "fixtures", "live_job_transcript.json"), "utf-8"),
) as {
  ws_events: UiEvent[];
  rest_job: JobStats;
  rest_results: CrackedRow[];
};

describe("job detail live view", () => {
  it("renders all 8 cracked rows from the stream alone, within 2s, no reload", () => {
    const started = performance.now();
    const model = new JobLiveModel("JOB-1");
    for (const event of fixture.ws_events) {
      model.applyEvent(event); // websocket path only; no REST hydration
    }
    const elapsedMs = performance.now() - started;

    expect(model.rows).toHaveLength(8);
    const plaintexts = model.rows.map((r) => Buffer.from(r.plaintext_hex, "hex").toString());
    expect(new Set(plaintexts).size).toBe(8);
    expect(model.status).toBe("completed");
    expect(model.crackedCount).toBe(8);
    expect(elapsedMs).toBeLessThan(2000);
  });

  it("gates the CSV download on job status", () => {
    const model = new JobLiveModel("JOB-1");
    for (const event of fixture.ws_events) {
      const wasEnabled = model.csvEnabled;
      model.applyEvent(event);
      if (model.status === "running" || model.status === "distributing") {
        expect(model.csvEnabled).toBe(false);
      }
      if (wasEnabled) expect(model.csvEnabled).toBe(true); // never un-completes
    }
    expect(model.status).toBe("completed");
    expect(model.csvEnabled).toBe(true);
  });

  it("never renders a cracked row twice, even when frames replay", () => {
    const model = new JobLiveModel("JOB-1");
    for (const event of fixture.ws_events) model.applyEvent(event);
    for (const event of fixture.ws_events) model.applyEvent(event); // full replay
    expect(model.rows).toHaveLength(8);
    const hashes = model.rows.map((r) => r.hash);
    expect(new Set(hashes).size).toBe(hashes.length);
  });

  it("ignores events addressed to other jobs", () => {
    const model = new JobLiveModel("SOME-OTHER-JOB");
    for (const event of fixture.ws_events) {
      expect(model.applyEvent(event)).toBe(false);
    }
    expect(model.rows).toHaveLength(0);
  });
});

describe("reload equivalence", () => {
  it("a mid-job reload rebuilds from REST exactly what the stream had shown", () => {
    // Stream half the job into one model...
    const streamed = new JobLiveModel("JOB-1");
    const crackedEvents = fixture.ws_events.filter((e) => e.type === "cracked");
    const cutoff = 4;
    let seen = 0;
    for (const event of fixture.ws_events) {
      if (event.type === "cracked") {
        if (seen === cutoff) break;
        seen += 1;
      }
      streamed.applyEvent(event);
    }
    expect(streamed.rows).toHaveLength(cutoff);

    // ...then "reload": a fresh model hydrated only from what REST would
    // return at that instant (the coordinator persists before broadcasting,
    // so REST always contains at least the rows the stream has shown).
    const streamedHashes = new Set(streamed.rows.map((r) => r.hash));
    const restAtCutoff = fixture.rest_results.filter((r) => streamedHashes.has(r.hash));
    const reloaded = new JobLiveModel("JOB-1");
    reloaded.hydrate({ ...fixture.rest_job, status: "running",
                       cracked_count: cutoff }, restAtCutoff);

    const rowKey = (r: CrackedRow) => `${r.hash}:${r.plaintext_hex}`;
    expect(new Set(reloaded.rows.map(rowKey))).toEqual(new Set(streamed.rows.map(rowKey)));

    // Resumed stream after the reload: the remaining cracks still land once.
    for (const event of crackedEvents) reloaded.applyEvent(event);
    expect(reloaded.rows).toHaveLength(8);
  });

  it("a reload after completion reconstructs the identical full view", () => {
    const streamed = new JobLiveModel("JOB-1");
    for (const event of fixture.ws_events) streamed.applyEvent(event);

    const reloaded = new JobLiveModel("JOB-1");
    reloaded.hydrate(fixture.rest_job, fixture.rest_results);

    const rowKey = (r: CrackedRow) => `${r.hash}:${r.plaintext_hex}:${r.node_id}`;
    expect(new Set(reloaded.rows.map(rowKey))).toEqual(new Set(streamed.rows.map(rowKey)));
    expect(reloaded.csvEnabled).toBe(true);
    expect(reloaded.status).toBe(streamed.status);
    expect(reloaded.crackedCount).toBe(streamed.crackedCount);
  });

  it("hydrate replaces stream rows wholesale (REST is authoritative)", () => {
    const model = new JobLiveModel("JOB-1");
    for (const event of fixture.ws_events) model.applyEvent(event);
    model.hydrate(fixture.rest_job, fixture.rest_results.slice(0, 3));
    expect(model.rows).toHaveLength(3);
  });
});

describe("reconnecting feed", () => {
  function fakeSocketPair() {
    const sockets: FakeSocket[] = [];
    class FakeSocket implements SocketLike {
      onopen: (() => void) | null = null;
      onmessage: ((event: { data: string }) => void) | null = null;
      onclose: (() => void) | null = null;
      closedByClient = false;
      close(): void {
        this.closedByClient = true;
      }
      serverOpen(): void {
        this.onopen?.();
      }
      serverSend(obj: unknown): void {
        this.onmessage?.({ data: JSON.stringify(obj) });
      }
      serverDrop(): void {
        this.onclose?.();
      }
    }
    return {
      sockets,
      factory: () => {
        const socket = new FakeSocket();
        sockets.push(socket);
        return socket;
      },
    };
  }

  it("surfaces reconnecting state and rehydrates on every connect", async () => {
    const { sockets, factory } = fakeSocketPair();
    const states: string[] = [];
    const events: UiEvent[] = [];
    let connects = 0;
    const feed = new ReconnectingFeed(factory, {
      onEvent: (e) => events.push(e),
      onConnect: () => { connects += 1; },
      onState: (s) => states.push(s),
    }, 10);

    feed.start();
    sockets[0].serverOpen();
    sockets[0].serverSend({ type: "status", job_id: "J", status: "running",
                            cracked_count: 0, total_hashes: 8, partial_results: false });
    expect(connects).toBe(1);
    expect(events).toHaveLength(1);

    sockets[0].serverDrop();
    expect(states).toContain("reconnecting");
    await new Promise((resolve) => setTimeout(resolve, 40));
    expect(sockets.length).toBeGreaterThan(1);
    sockets[1].serverOpen();
    expect(connects).toBe(2); // owner re-hydrates from REST here
    expect(states[states.length - 1]).toBe("live");

    feed.stop();
    expect(states[states.length - 1]).toBe("closed");
  });
});
