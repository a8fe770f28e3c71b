import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { UnauthenticatedError } from "../src/api.js";
import { DashboardController } from "../src/dashboard.js";
import { FakeHubApi, RecordingRenderer, card, notFound } from "./fakes.js";

function make(api: FakeHubApi) {
  const renderer = new RecordingRenderer();
  const navigations: string[] = [];
  const controller = new DashboardController(api, renderer, {
    navigate: (url) => navigations.push(url),
    pollIntervalMs: 2000,
    pollTimeoutMs: 90_000,
  });
  return { controller, renderer, navigations };
}

describe("DashboardController", () => {
  beforeEach(() => {
    vi.useFakeTimers();
  });

  afterEach(() => {
    vi.useRealTimers();
  });

  it("renders one card per application with the action set for its state", async () => {
    const api = new FakeHubApi();
    api.listing = {
      user: "alice",
      workspaces: [
        card("a", "not-provisioned"),
        card("b", "starting"),
        card("c", "running", "/alice/c"),
        card("d", "culled"),
        card("e", "deleting"),
      ],
    };
    const { controller, renderer } = make(api);
    await controller.load();

    const view = renderer.last();
    expect(view.user).toBe("alice");
    expect(view.cards.map((c) => c.application)).toEqual(["a", "b", "c", "d", "e"]);
    const byApp = Object.fromEntries(view.cards.map((c) => [c.application, c.actions]));
    expect(byApp["a"]).toEqual({ canOpen: false, canLaunch: true, canDecommission: false });
    expect(byApp["b"]).toEqual({ canOpen: false, canLaunch: false, canDecommission: true });
    expect(byApp["c"]).toEqual({ canOpen: true, canLaunch: false, canDecommission: true });
    expect(byApp["d"]).toEqual({ canOpen: false, canLaunch: true, canDecommission: true });
    expect(byApp["e"]).toEqual({ canOpen: false, canLaunch: false, canDecommission: false });
  });

  it("never fabricates state: rendered states come from the server", async () => {
    const api = new FakeHubApi();
    api.listing = { user: "alice", workspaces: [card("jupyter", "culled")] };
    const { controller, renderer } = make(api);
    await controller.load();
    expect(renderer.last().cards[0].state).toBe("culled");

    api.listing = { user: "alice", workspaces: [card("jupyter", "running", "/alice/jupyter")] };
    await controller.load();
    expect(renderer.last().cards[0].state).toBe("running");
  });

  it("launch performs exactly one mutating call and converges to running", async () => {
    const api = new FakeHubApi();
    api.listing = { user: "alice", workspaces: [card("jupyter", "not-provisioned")] };
    api.connectResult = { outcome: "provisioning-then-starting", url: "/api/poll/jupyter" };
    api.pollScript.set("jupyter", [
      { state: "starting", open_url: null },
      { state: "starting", open_url: null },
      { state: "running", open_url: "/alice/jupyter" },
    ]);
    const { controller, renderer } = make(api);
    await controller.load();

    const launch = controller.launch("jupyter");
    await vi.advanceTimersByTimeAsync(10_000);
    const outcome = await launch;
    expect(outcome).toEqual({ kind: "running", openUrl: "/alice/jupyter" });
    expect(api.mutatingCalls()).toBe(1);

    // the card flipped to running exactly once, driven by poll data
    const states = renderer.cardStates("jupyter");
    expect(states[states.length - 1]).toBe("running");
    expect(states.filter((s) => s === "running")).toHaveLength(1);
    const final = renderer.last().cards[0];
    expect(final.open_url).toBe("/alice/jupyter");
    expect(final.actions.canOpen).toBe(true);
  });

  it("redirect-now navigates without polling", async () => {
    const api = new FakeHubApi();
    api.listing = { user: "alice", workspaces: [card("jupyter", "running", "/alice/jupyter")] };
    api.connectResult = { outcome: "redirect-now", url: "/alice/jupyter" };
    const { controller, navigations } = make(api);
    await controller.load();
    await controller.launch("jupyter");
    expect(navigations).toEqual(["/alice/jupyter"]);
    expect(api.calls.poll).toBe(0);
    expect(api.mutatingCalls()).toBe(1);
  });

  it("backend failure shows a retriable error without extra calls", async () => {
    const api = new FakeHubApi();
    api.listing = { user: "alice", workspaces: [card("jupyter", "culled")] };
    api.connectError = new Error("backend-failure: no capacity");
    const { controller, renderer } = make(api);
    await controller.load();
    await controller.launch("jupyter");
    expect(api.mutatingCalls()).toBe(1);
    const view = renderer.last().cards[0];
    expect(view.error).toContain("backend-failure");
    expect(view.actions.canLaunch).toBe(true); // retry stays available
  });

  it("confirmed decommission sends exactly one call and reconciles", async () => {
    const api = new FakeHubApi();
    api.listing = { user: "alice", workspaces: [card("jupyter", "running", "/alice/jupyter")] };
    const { controller, renderer } = make(api);
    await controller.load();

    const done = await controller.confirmDecommission("jupyter", () => true);
    expect(done).toBe(true);
    expect(api.mutatingCalls()).toBe(1);
    expect(renderer.cardStates("jupyter")).toContain("deleting"); // optimistic
    expect(renderer.last().cards[0].state).toBe("not-provisioned"); // reconciled

  });

  it("cancelled confirmation makes zero API calls", async () => {
    const api = new FakeHubApi();
    api.listing = { user: "alice", workspaces: [card("jupyter", "running", "/alice/jupyter")] };
    const { controller } = make(api);
    await controller.load();
    const done = await controller.confirmDecommission("jupyter", () => false);
    expect(done).toBe(false);
    expect(api.mutatingCalls()).toBe(0);
    expect(controller.view().cards[0].state).toBe("running");
  });

  it("decommission 404 refreshes from the listing", async () => {
    const api = new FakeHubApi();
    api.listing = { user: "alice", workspaces: [card("jupyter", "culled")] };
    api.decommissionError = notFound();
    const { controller, renderer } = make(api);
    await controller.load();
    const listsBefore = api.calls.list;
    await controller.confirmDecommission("jupyter", () => true);
    expect(api.calls.list).toBe(listsBefore + 1);
    expect(renderer.last().cards[0].error).toBeNull();
  });

  it("decommission during polling stops the poll and shows the server state", async () => {
    const api = new FakeHubApi();
    api.listing = { user: "alice", workspaces: [card("jupyter", "culled")] };
    api.pollScript.set("jupyter", [{ state: "starting", open_url: null }]);
    const { controller, renderer } = make(api);
    await controller.load();

    const launch = controller.launch("jupyter");
    await vi.advanceTimersByTimeAsync(3000);
    await controller.confirmDecommission("jupyter", () => true);
    await vi.advanceTimersByTimeAsync(5000);
    const outcome = await launch;
    expect(outcome?.kind).toBe("stopped");
    expect(renderer.last().cards[0].state).toBe("not-provisioned");
    expect(api.mutatingCalls()).toBe(2); // one connect + one decommission

  });

  it("unauthenticated listing bounces to the gateway-protected shell", async () => {
    const api = new FakeHubApi();
    api.listWorkspaces = async () => {
      throw new UnauthenticatedError();
    };
    const { controller, navigations } = make(api);
    await controller.load();
    expect(navigations).toEqual(["/app"]);
  });

  it("poll timeout surfaces a retriable error and retry converges", async () => {
    const api = new FakeHubApi();
    api.listing = { user: "alice", workspaces: [card("jupyter", "culled")] };
    api.pollScript.set("jupyter", [{ state: "starting", open_url: null }]);
    const { controller, renderer } = make(api);
    await controller.load();
    const launch = controller.launch("jupyter");
    await vi.advanceTimersByTimeAsync(95_000);
    const outcome = await launch;
    expect(outcome?.kind).toBe("timeout");
    expect(renderer.last().cards[0].error).toContain("did not start in time");

    // retry: the same user action path, converging this time
    api.pollScript.set("jupyter", [{ state: "running", open_url: "/alice/jupyter" }]);
    const retry = controller.launch("jupyter");
    await vi.advanceTimersByTimeAsync(5000);
    expect((await retry)?.kind).toBe("running");
    expect(api.mutatingCalls()).toBe(2); // one per user action
    expect(renderer.last().cards[0].error).toBeNull();
    expect(renderer.last().cards[0].state).toBe("running");
  });
});
