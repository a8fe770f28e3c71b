// @vitest-environment happy-dom

import { beforeEach, describe, expect, it, vi } from "vitest";

import { DashboardController } from "../src/dashboard.js";
import { DomRenderer } from "../src/dom.js";
import { FakeHubApi, card } from "./fakes.js";

function setup(api: FakeHubApi) {
  document.body.innerHTML = '<div id="dashboard"></div>';
  const root = document.getElementById("dashboard")!;
  const renderer = new DomRenderer(root);
  const controller = new DashboardController(api, renderer, { navigate: () => {} });
  renderer.attach(controller);
  return { controller, root };
}

function buttonLabels(root: HTMLElement, app: string): string[] {
  return Array.from(root.querySelectorAll(".card")).flatMap((element) =>
    element.querySelector("h2")?.textContent === app
      ? Array.from(element.querySelectorAll("button")).map((b) => b.textContent ?? "")
      : [],
  );
}

describe("DomRenderer", () => {
  it("renders the action buttons per state", async () => {
    const api = new FakeHubApi();
    api.listing = {
      user: "alice",
      workspaces: [
        card("fresh", "not-provisioned"),
        card("warm", "running", "/alice/warm"),
        card("cold", "culled"),
      ],
    };
    const { controller, root } = setup(api);
    await controller.load();

    expect(buttonLabels(root, "fresh")).toEqual(["Launch"]);
    expect(buttonLabels(root, "warm")).toEqual(["Open", "Decommission"]);
    expect(buttonLabels(root, "cold")).toEqual(["Launch", "Decommission"]);
  });

  it("clicking Launch triggers exactly one connect call", async () => {
    const api = new FakeHubApi();
    api.listing = { user: "alice", workspaces: [card("jupyter", "culled")] };
    api.pollScript.set("jupyter", [{ state: "running", open_url: "/alice/jupyter" }]);
    const { controller, root } = setup(api);
    await controller.load();

    const launchButton = Array.from(root.querySelectorAll("button")).find((b) => b.textContent === "Launch")!;
    launchButton.click();
    await vi.waitFor(() => expect(api.calls.connect).toBe(1));
  });

  it("shows the empty-state message when no applications are configured", async () => {
    const api = new FakeHubApi();
    api.listing = { user: "alice", workspaces: [] };
    const { controller, root } = setup(api);
    await controller.load();
    expect(root.querySelector(".empty")?.textContent).toContain("No applications");
  });
});
