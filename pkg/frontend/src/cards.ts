// Pure view-model: which actions a card offers in each state.
//
// Open only while Running; Launch from NotProvisioned or Culled;
// Decommission everywhere except NotProvisioned (nothing to delete) and
// Deleting (already going away).

import type { WorkspaceState } from "./api.js";

export interface CardActions {
  canOpen: boolean;
  canLaunch: boolean;
  canDecommission: boolean;
}

export function actionsFor(state: WorkspaceState): CardActions {
  return {
    canOpen: state === "running",
    canLaunch: state === "not-provisioned" || state === "culled",
    canDecommission: state !== "not-provisioned" && state !== "deleting",
  };
}

export const STATE_LABELS: Record<WorkspaceState, string> = {
  "not-provisioned": "Not provisioned",
  starting: "Starting…",
  running: "Running",
  culled: "Stopped (idle)",
  deleting: "Deleting…",
};
