import type { CrackedRow, JobStats, UiEvent } from "./types.js";

export type FeedState = "live" | "reconnecting" | "closed";

/** View model for the live job page.
 *
 * Websocket events accelerate the view; REST stays the source of truth.
 * hydrate() (initial load and every reconnect/reload) replaces the row set
 * wholesale from REST, so a full page reload reconstructs exactly the same
 * view the stream had built. Rows are deduplicated by (job, hash): a crack
 * can arrive over the socket and again from hydration without rendering
 * twice.
 */
export class JobLiveModel {
  job: JobStats | null = null;
  rows: CrackedRow[] = [];
  status = "unknown";
  crackedCount = 0;
  totalHashes = 0;
  partialResults = false;
  nodeProgress: Record<string, { tried: number; speed_hps: number }> = {};
  feed: FeedState = "closed";

  private seen = new Set<string>();

  constructor(public readonly jobId: string) {}

  private key(hash: string): string {
    return `${this.jobId}:${hash}`;
  }

  /** REST reconciliation: authoritative job detail + full result set. */
  hydrate(job: JobStats, results: CrackedRow[]): void {
    this.job = job;
    this.status = job.status;
    this.crackedCount = job.cracked_count;
    this.totalHashes = job.total_hashes;
    this.partialResults = job.partial_results;
    this.rows = [];
    this.seen.clear();
    for (const row of results) {
      this.seen.add(this.key(row.hash));
      this.rows.push(row);
    }
  }

  /** Websocket entry point; ignores events for other jobs and duplicates. */
  applyEvent(event: UiEvent): boolean {
    if (event.job_id !== this.jobId) return false;
    switch (event.type) {
      case "cracked": {
        const key = this.key(event.hash);
        if (this.seen.has(key)) return false;
        this.seen.add(key);
        this.rows.push({
          hash: event.hash,
          plaintext_hex: event.plaintext_hex,
          node_id: event.node_id,
          at: event.at,
        });
        this.crackedCount = Math.max(this.crackedCount + 1, this.rows.length);
        return true;
      }
      case "status":
        this.status = event.status;
        this.crackedCount = event.cracked_count;
        this.totalHashes = event.total_hashes;
        this.partialResults = event.partial_results;
        return true;
      case "progress":
        this.nodeProgress[event.node_id] = {
          tried: event.tried,
          speed_hps: event.speed_hps,
        };
        return true;
    }
  }

  get terminal(): boolean {
    return this.status === "completed" || this.status === "failed";
  }

  /** The CSV download unlocks only once the job has completed. */
  get csvEnabled(): boolean {
    return this.status === "completed";
  }
}

export interface SocketLike {
  onopen: (() => void) | null;
  onmessage: ((event: { data: string }) => void) | null;
  onclose: (() => void) | null;
  close(): void;
}

export interface FeedCallbacks {
  onEvent: (event: UiEvent) => void;
  /** Fired on (re)connect; the owner re-hydrates from REST here. */
  onConnect: () => void;
  onState: (state: FeedState) => void;
}

/** Reconnecting wrapper around the /ws/ui socket. Drops surface as a
 * visible "reconnecting" state and trigger a REST re-hydration once the
 * socket is back. */
export class ReconnectingFeed {
  private socket: SocketLike | null = null;
  private stopped = false;
  private attempt = 0;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private socketFactory: () => SocketLike,
    private callbacks: FeedCallbacks,
    private maxBackoffMs = 10_000,
  ) {}

  start(): void {
    this.stopped = false;
    this.connect();
  }

  private connect(): void {
    if (this.stopped) return;
    let socket: SocketLike;
    try {
      socket = this.socketFactory();
    } catch {
      this.scheduleReconnect();
      return;
    }
    this.socket = socket;
    socket.onopen = () => {
      this.attempt = 0;
      this.callbacks.onState("live");
      this.callbacks.onConnect();
    };
    socket.onmessage = (event) => {
      let parsed: UiEvent;
      try {
        parsed = JSON.parse(event.data) as UiEvent;
      } catch {
        return; // not ours; ignore
      }
      this.callbacks.onEvent(parsed);
    };
    socket.onclose = () => {
      this.socket = null;
      this.scheduleReconnect();
    };
  }

  private scheduleReconnect(): void {
    if (this.stopped) return;
    this.callbacks.onState("reconnecting");
    const delay = Math.min(500 * 2 ** this.attempt, this.maxBackoffMs);
    this.attempt += 1;
    this.timer = setTimeout(() => this.connect(), delay);
  }

  stop(): void {
    this.stopped = true;
    if (this.timer !== null) clearTimeout(this.timer);
    if (this.socket) this.socket.close();
    this.socket = null;
    this.callbacks.onState("closed");
  }
}
