import type { GaConfigDoc } from "./types.js";

export interface PanelRequest {
  method: "POST" | "PATCH";
  path: string;
  body?: unknown;
}

export type PanelAction =
  | { type: "pause" }
  | { type: "resume" }
  | { type: "step"; n: number }
  | { type: "patch"; fields: Record<string, number> };

export interface FieldSpec {
  name: "link_failure_prob" | "q" | "u_low" | "u_high";
  label: string;
  kind: "probability" | "count" | "threshold";
}

export const PANEL_FIELDS: FieldSpec[] = [
  { name: "link_failure_prob", label: "link failure probability", kind: "probability" },
  { name: "q", label: "parents kept (q)", kind: "count" },
  { name: "u_low", label: "utilization low threshold", kind: "threshold" },
  { name: "u_high", label: "utilization high threshold", kind: "threshold" },
];

/** Every panel action maps to exactly one protocol request. */
export function requestForAction(action: PanelAction, runId: string): PanelRequest {
  switch (action.type) {
    case "pause":
      return { method: "POST", path: `/sessions/${runId}/pause` };
    case "resume":
      return { method: "POST", path: `/sessions/${runId}/resume` };
    case "step":
      return { method: "POST", path: `/sessions/${runId}/step`, body: { n_generations: action.n } };
    case "patch":
      return { method: "PATCH", path: `/sessions/${runId}/config`, body: action.fields };
  }
}

/**
 * Client-side mirror of the server's validation for the exposed fields,
 * checked against the live config so cross-field rules (u_low < u_high)
 * hold when only one side is edited. A patch that fails here is never
 * sent.
 */
export function validatePatch(
  fields: Record<string, number>,
  live: GaConfigDoc,
): Record<string, string> {
  const errors: Record<string, string> = {};
  const merged: Record<string, number> = { ...(live as unknown as Record<string, number>), ...fields };

  for (const [name, value] of Object.entries(fields)) {
    if (!Number.isFinite(value)) errors[name] = "must be a number";
  }
  if (errors["q"] === undefined && "q" in fields) {
    if (!Number.isInteger(fields["q"])) errors["q"] = "must be an integer";
    else if (fields["q"]! < 2) errors["q"] = "selection count q must be >= 2";
  }
  if ("link_failure_prob" in fields && errors["link_failure_prob"] === undefined) {
    const p = fields["link_failure_prob"]!;
    if (p < 0 || p > 1) errors["link_failure_prob"] = "probability must lie in [0, 1]";
  }
  if ("u_low" in fields && errors["u_low"] === undefined && merged["u_low"]! <= 0) {
    errors["u_low"] = "utilization threshold must be > 0";
  }
  if (
    errors["u_low"] === undefined &&
    errors["u_high"] === undefined &&
    ("u_low" in fields || "u_high" in fields) &&
    merged["u_low"]! >= merged["u_high"]!
  ) {
    errors["u_high"] = "u_high must be greater than u_low";
  }
  return errors;
}

export function validateStepCount(n: number): string | null {
  if (!Number.isInteger(n) || n < 1) return "step count must be a positive integer";
  return null;
}

/** Validate, then either report field errors or produce the one request. */
export function planPatch(
  fields: Record<string, number>,
  live: GaConfigDoc,
  runId: string,
): { errors: Record<string, string> } | { request: PanelRequest } {
  const errors = validatePatch(fields, live);
  if (Object.keys(errors).length) return { errors };
  return { request: requestForAction({ type: "patch", fields }, runId) };
}
