// Startup polling: after a launch, watch /api/poll/{app} until the
// workspace is Running (or the wait times out / the workspace disappears).
// At most one poll loop runs per application; every observed state is
// pushed to the listener so the card always shows the server's view.

import type { HubApi, PollResult } from "./api.js";

export const POLL_INTERVAL_MS = 2000;
export const POLL_TIMEOUT_MS = 90_000;

export type PollOutcome =
  | { kind: "running"; openUrl: string | null }
  | { kind: "gone" }
  | { kind: "timeout" }
  | { kind: "stopped" }
  | { kind: "failed"; reason: string };

interface ActivePoll {
  cancelled: boolean;
  wake: (() => void) | null;
  promise: Promise<PollOutcome>;
}

export class StartupPoller {
  private readonly active = new Map<string, ActivePoll>();

  constructor(
    private readonly api: HubApi,
    private readonly onUpdate: (app: string, result: PollResult) => void,
    private readonly intervalMs: number = POLL_INTERVAL_MS,
    private readonly timeoutMs: number = POLL_TIMEOUT_MS,
  ) {}

  isPolling(app: string): boolean {
    return this.active.has(app);
  }

  start(app: string): Promise<PollOutcome> {
    const existing = this.active.get(app);
    if (existing) {
      return existing.promise;
    }
    const entry: ActivePoll = { cancelled: false, wake: null, promise: Promise.resolve({ kind: "stopped" }) };
    entry.promise = this.loop(app, entry).finally(() => {
      if (this.active.get(app) === entry) {
        this.active.delete(app);
      }
    });
    this.active.set(app, entry);
    return entry.promise;
  }

  stop(app: string): void {
    const entry = this.active.get(app);
    if (entry) {
      entry.cancelled = true;
      entry.wake?.();
    }
  }

  private async loop(app: string, entry: ActivePoll): Promise<PollOutcome> {
    const deadline = Date.now() + this.timeoutMs;
    while (!entry.cancelled) {
      let result: PollResult;
      try {
        result = await this.api.poll(app);
      } catch (error) {
        return { kind: "failed", reason: error instanceof Error ? error.message : String(error) };
      }
      if (entry.cancelled) {
        break;
      }
      this.onUpdate(app, result);
      if (result.state === "running") {
        return { kind: "running", openUrl: result.open_url };
      }
      if (result.state === "not-provisioned") {
        return { kind: "gone" }; // decommissioned while we were watching
      }
      if (Date.now() >= deadline) {
        return { kind: "timeout" };
      }
      await this.sleep(entry);
    }
    return { kind: "stopped" };
  }

  private sleep(entry: ActivePoll): Promise<void> {
    return new Promise((resolve) => {
      const timer = setTimeout(() => {
        entry.wake = null;
        resolve();
      }, this.intervalMs);
      entry.wake = () => {
        clearTimeout(timer);
        entry.wake = null;
        resolve();
      };
    });
  }
}
