// View state lives entirely in the URL query string: filters, queue page,
// and the selected page id. Reloading or sharing the URL restores the view.

import type { FlagValue, StatusValue, VerdictValue } from "./types.js";

export interface ViewState {
  flag: FlagValue | null;
  status: StatusValue | null;
  verdict: VerdictValue | null;
  activeOnly: boolean;
  page: number;
  selected: string | null;
}

export const DEFAULT_STATE: ViewState = {
  flag: null,
  status: null,
  verdict: null,
  activeOnly: true,
  page: 1,
  selected: null,
};

const FLAGS = new Set([
  "repeat_defacement",
  "fixed",
  "defaced_fluctuating",
  "defaced_constant",
  "not_found",
]);
const STATUSES = new Set([
  "defaced",
  "suspected_false_positive",
  "clean",
  "unreachable",
]);
const VERDICTS = new Set(["confirmed_defaced", "false_positive", "remediated"]);

export function parseState(search: string): ViewState {
  const params = new URLSearchParams(search);
  const flag = params.get("flag");
  const status = params.get("status");
  const verdict = params.get("verdict");
  const pageRaw = Number(params.get("page") ?? "1");
  return {
    flag: flag && FLAGS.has(flag) ? (flag as FlagValue) : null,
    status: status && STATUSES.has(status) ? (status as StatusValue) : null,
    verdict: verdict && VERDICTS.has(verdict) ? (verdict as VerdictValue) : null,
    activeOnly: params.get("all") !== "1",
    page: Number.isInteger(pageRaw) && pageRaw >= 1 ? pageRaw : 1,
    selected: params.get("sel"),
  };
}

export function stateToQuery(state: ViewState): string {
  const params = new URLSearchParams();
  if (state.flag) params.set("flag", state.flag);
  if (state.status) params.set("status", state.status);
  if (state.verdict) params.set("verdict", state.verdict);
  if (!state.activeOnly) params.set("all", "1");
  if (state.page > 1) params.set("page", String(state.page));
  if (state.selected) params.set("sel", state.selected);
  const query = params.toString();
  return query ? `?${query}` : "";
}
