// DOM rendering for the dashboard view model.

import type { DashboardController, DashboardView, Renderer } from "./dashboard.js";
import { STATE_LABELS } from "./cards.js";

export class DomRenderer implements Renderer {
  private controller: DashboardController | null = null;

  constructor(private readonly root: HTMLElement) {}

  attach(controller: DashboardController): void {
    this.controller = controller;
  }

  render(view: DashboardView): void {
    const root = this.root;
    root.textContent = "";

    const heading = document.createElement("h1");
    heading.textContent = `Workspaces for ${view.user || "…"}`;
    root.appendChild(heading);

    if (view.globalError) {
      const banner = document.createElement("div");
      banner.className = "banner error";
      banner.textContent = view.globalError;
      root.appendChild(banner);
    }

    if (view.cards.length === 0 && !view.globalError) {
      const empty = document.createElement("p");
      empty.className = "empty";
      empty.textContent = "No applications are configured.";
      root.appendChild(empty);
      return;
    }

    const grid = document.createElement("div");
    grid.className = "cards";
    for (const card of view.cards) {
      const element = document.createElement("section");
      element.className = `card state-${card.state}`;

      const title = document.createElement("h2");
      title.textContent = card.display_name;
      element.appendChild(title);

      const state = document.createElement("p");
      state.className = "state";
      state.textContent = STATE_LABELS[card.state];
      element.appendChild(state);

      if (card.error) {
        const note = document.createElement("p");
        note.className = "error";
        note.textContent = card.error;
        element.appendChild(note);
      }

      const actions = document.createElement("div");
      actions.className = "actions";
      if (card.actions.canOpen && card.open_url) {
        actions.appendChild(this.button("Open", () => this.controller?.open(card.application)));
      }
      if (card.actions.canLaunch || card.error) {
        // an errored launch stays retriable even while the server still
        // reports the workspace as starting (connect is idempotent)
        const label = card.error ? "Retry" : "Launch";
        actions.appendChild(
          this.button(label, () => void this.controller?.launch(card.application), card.busy),
        );
      }
      if (card.actions.canDecommission) {
        actions.appendChild(
          this.button(
            "Decommission",
            () =>
              void this.controller?.confirmDecommission(card.application, () =>
                window.confirm(`Delete the ${card.display_name} workspace? Files in your home directory are kept.`),
              ),
            card.busy,
          ),
        );
      }
      element.appendChild(actions);
      grid.appendChild(element);
    }
    root.appendChild(grid);
  }

  private button(label: string, onClick: () => void, disabled = false): HTMLButtonElement {
    const button = document.createElement("button");
    button.textContent = label;
    button.disabled = disabled;
    button.addEventListener("click", onClick);
    return button;
  }
}
