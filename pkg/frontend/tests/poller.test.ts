import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import type { PollResult } from "../src/api.js";
import { StartupPoller } from "../src/poller.js";
import { FakeHubApi } from "./fakes.js";

describe("StartupPoller", () => {
  beforeEach(() => {
    vi.useFakeTimers();
  });

  afterEach(() => {
    vi.useRealTimers();
  });

  function make(api: FakeHubApi) {
    const updates: Array<[string, PollResult]> = [];
    const poller = new StartupPoller(api, (app, result) => updates.push([app, result]), 2000, 90_000);
    return { poller, updates };
  }

  it("reaches running after a scripted sequence and reports each state once", async () => {
    const api = new FakeHubApi();
    api.pollScript.set("jupyter", [
      { state: "starting", open_url: null },
      { state: "starting", open_url: null },
      { state: "running", open_url: "/alice/jupyter" },
    ]);
    const { poller, updates } = make(api);
    const outcome = poller.start("jupyter");
    await vi.advanceTimersByTimeAsync(10_000);
    expect(await outcome).toEqual({ kind: "running", openUrl: "/alice/jupyter" });
    expect(api.calls.poll).toBe(3);
    expect(updates.map(([, result]) => result.state)).toEqual(["starting", "starting", "running"]);
  });

  it("keeps at most one loop per application", async () => {
    const api = new FakeHubApi();
    api.pollScript.set("jupyter", [
      { state: "starting", open_url: null },
      { state: "running", open_url: "/alice/jupyter" },
    ]);
    const { poller } = make(api);
    const first = poller.start("jupyter");
    const second = poller.start("jupyter");
    expect(second).toBe(first);
    await vi.advanceTimersByTimeAsync(5000);
    await first;
    expect(api.calls.poll).toBe(2);
  });

  it("stop cancels the loop", async () => {
    const api = new FakeHubApi();
    api.pollScript.set("jupyter", [{ state: "starting", open_url: null }]);
    const { poller } = make(api);
    const outcome = poller.start("jupyter");
    await vi.advanceTimersByTimeAsync(2500);
    poller.stop("jupyter");
    expect(await outcome).toEqual({ kind: "stopped" });
    expect(poller.isPolling("jupyter")).toBe(false);
  });

  it("a decommissioned workspace ends the loop as gone", async () => {
    const api = new FakeHubApi();
    api.pollScript.set("jupyter", [
      { state: "starting", open_url: null },
      { state: "not-provisioned", open_url: null },
    ]);
    const { poller, updates } = make(api);
    const outcome = poller.start("jupyter");
    await vi.advanceTimersByTimeAsync(5000);
    expect(await outcome).toEqual({ kind: "gone" });
    expect(updates[updates.length - 1][1].state).toBe("not-provisioned");
  });

  it("times out after the configured budget", async () => {
    const api = new FakeHubApi();
    api.pollScript.set("jupyter", [{ state: "starting", open_url: null }]);
    const { poller } = make(api);
    const outcome = poller.start("jupyter");
    await vi.advanceTimersByTimeAsync(95_000);
    expect(await outcome).toEqual({ kind: "timeout" });
    // 90s budget at one poll per 2s
    expect(api.calls.poll).toBeGreaterThanOrEqual(45);
  });

  it("api failures surface as failed", async () => {
    const api = new FakeHubApi();
    api.poll = async () => {
      throw new Error("backend-failure: boom");
    };
    const { poller } = make(api);
    const outcome = await poller.start("jupyter");
    expect(outcome).toEqual({ kind: "failed", reason: "backend-failure: boom" });
  });
});
