// Dashboard controller: holds the latest server-reported card states and
// turns user actions into exactly one API call each.
//
// Rendered state is always the most recent value from /api/workspaces or
// /api/poll, with one sanctioned exception: a just-confirmed decommission
// shows Deleting optimistically until the next listing reconciles it.

import { type HubApi, type WorkspaceCard, ApiError, UnauthenticatedError } from "./api.js";
import { type CardActions, actionsFor } from "./cards.js";
import { type PollOutcome, StartupPoller } from "./poller.js";

export interface CardView extends WorkspaceCard {
  actions: CardActions;
  busy: boolean;
  error: string | null;
}

export interface DashboardView {
  user: string;
  cards: CardView[];
  globalError: string | null;
}

export interface Renderer {
  render(view: DashboardView): void;
}

export interface ControllerOptions {
  navigate?: (url: string) => void;
  pollIntervalMs?: number;
  pollTimeoutMs?: number;
}

export class DashboardController {
  private user = "";
  private order: string[] = [];
  private readonly cards = new Map<string, WorkspaceCard>();
  private readonly busy = new Set<string>();
  private readonly errors = new Map<string, string>();
  private globalError: string | null = null;
  private readonly poller: StartupPoller;
  private readonly navigate: (url: string) => void;

  constructor(
    private readonly api: HubApi,
    private readonly renderer: Renderer,
    options: ControllerOptions = {},
  ) {
    this.navigate = options.navigate ?? ((url) => window.location.assign(url));
    this.poller = new StartupPoller(
      api,
      (app, result) => {
        const card = this.cards.get(app);
        if (card) {
          this.cards.set(app, { ...card, state: result.state, open_url: result.open_url });
          this.render();
        }
      },
      options.pollIntervalMs,
      options.pollTimeoutMs,
    );
  }

  view(): DashboardView {
    return {
      user: this.user,
      cards: this.order
        .map((app) => this.cards.get(app))
        .filter((card): card is WorkspaceCard => card !== undefined)
        .map((card) => ({
          ...card,
          actions: actionsFor(card.state),
          busy: this.busy.has(card.application),
          error: this.errors.get(card.application) ?? null,
        })),
      globalError: this.globalError,
    };
  }

  async load(): Promise<void> {
    try {
      const listing = await this.api.listWorkspaces();
      this.user = listing.user;
      this.order = listing.workspaces.map((card) => card.application);
      this.cards.clear();
      for (const card of listing.workspaces) {
        this.cards.set(card.application, card);
      }
      this.globalError = null;
    } catch (error) {
      if (error instanceof UnauthenticatedError) {
        this.navigate("/app");
        return;
      }
      this.globalError = error instanceof Error ? error.message : String(error);
    }
    this.render();
  }

  async launch(app: string): Promise<PollOutcome | null> {
    if (this.busy.has(app)) {
      return null;
    }
    this.errors.delete(app);
    this.busy.add(app);
    this.render();
    try {
      const result = await this.api.connect(app);
      if (result.outcome === "redirect-now") {
        this.navigate(result.url);
        return null;
      }
    } catch (error) {
      this.errors.set(app, error instanceof Error ? error.message : String(error));
      return null;
    } finally {
      this.busy.delete(app);
      this.render();
    }

    const outcome = await this.poller.start(app);
    if (outcome.kind === "timeout") {
      this.errors.set(app, "workspace did not start in time; try again");
    } else if (outcome.kind === "failed") {
      this.errors.set(app, outcome.reason);
    }
    this.render();
    return outcome;
  }

  async confirmDecommission(app: string, confirm: () => boolean | Promise<boolean>): Promise<boolean> {
    if (!(await confirm())) {
      return false;
    }
    this.poller.stop(app);
    this.errors.delete(app);
    const card = this.cards.get(app);
    if (card) {
      this.cards.set(app, { ...card, state: "deleting", open_url: null });
      this.render();
    }
    try {
      await this.api.decommission(app);
    } catch (error) {
      if (!(error instanceof ApiError && error.status === 404)) {
        this.errors.set(app, error instanceof Error ? error.message : String(error));
      }
      // fall through: reconcile from the server either way
    }
    await this.load();
    return true;
  }

  open(app: string): void {
    const card = this.cards.get(app);
    if (card && card.state === "running" && card.open_url) {
      this.navigate(card.open_url);
    }
  }

  stopPolling(app: string): void {
    this.poller.stop(app);
  }

  private render(): void {
    this.renderer.render(this.view());
  }
}
