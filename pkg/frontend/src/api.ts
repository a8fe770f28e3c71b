// Typed access to the hub API. All dashboard data flows through these four
// endpoints; the gateway session cookie rides along automatically.

export type WorkspaceState =
  | "not-provisioned"
  | "starting"
  | "running"
  | "culled"
  | "deleting";

export interface WorkspaceCard {
  application: string;
  display_name: string;
  state: WorkspaceState;
  open_url: string | null;
  last_activity: number | null;
}

export interface WorkspaceListing {
  user: string;
  workspaces: WorkspaceCard[];
}

export interface ConnectResult {
  outcome: "redirect-now" | "starting" | "provisioning-then-starting";
  url: string;
}

export interface PollResult {
  state: WorkspaceState;
  open_url: string | null;
}

export interface HubApi {
  listWorkspaces(): Promise<WorkspaceListing>;
  connect(app: string): Promise<ConnectResult>;
  poll(app: string): Promise<PollResult>;
  decommission(app: string): Promise<void>;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    detail: string,
  ) {
    super(`${code}: ${detail}`);
  }
}

export class UnauthenticatedError extends Error {
  constructor() {
    super("gateway session missing or expired");
  }
}

async function asJson<T>(response: Response): Promise<T> {
  if (response.redirected || response.status === 401) {
    throw new UnauthenticatedError();
  }
  if (!response.ok) {
    let code = `http-${response.status}`;
    let detail = response.statusText;
    try {
      const body = await response.json();
      code = body.error ?? code;
      detail = body.detail ?? detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(response.status, code, detail);
  }
  return (await response.json()) as T;
}

export class HttpHubApi implements HubApi {
  constructor(private readonly base: string = "") {}

  async listWorkspaces(): Promise<WorkspaceListing> {
    return asJson(await fetch(`${this.base}/api/workspaces`));
  }

  async connect(app: string): Promise<ConnectResult> {
    return asJson(await fetch(`${this.base}/api/connect/${app}`, { method: "POST" }));
  }

  async poll(app: string): Promise<PollResult> {
    return asJson(await fetch(`${this.base}/api/poll/${app}`));
  }

  async decommission(app: string): Promise<void> {
    await asJson(await fetch(`${this.base}/api/decommission/${app}`, { method: "POST" }));
  }
}
