// Thin client over the triage API. The fetch function is injectable so
// tests can run without a server.

import type { PageList, Timeline, VerdictRecord, VerdictValue } from "./types.js";
import type { ViewState } from "./state.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, init);
    if (!response.ok) {
      let detail = `${response.status}`;
      try {
        const body = await response.json();
        detail = body.error ?? JSON.stringify(body);
      } catch {
        // non-JSON error body; keep the status code
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  listPages(state: ViewState, perPage = 50): Promise<PageList> {
    const params = new URLSearchParams();
    if (state.flag) params.set("flag", state.flag);
    if (state.status) params.set("status", state.status);
    if (state.verdict) params.set("verdict", state.verdict);
    params.set("page", String(state.page));
    params.set("per_page", String(perPage));
    return this.request<PageList>(`/api/pages?${params}`);
  }

  timeline(pageId: string): Promise<Timeline> {
    return this.request<Timeline>(`/api/pages/${pageId}/timeline`);
  }

  postVerdict(
    pageId: string,
    verdict: VerdictValue,
    analyst: string,
    note?: string,
  ): Promise<VerdictRecord> {
    return this.request<VerdictRecord>(`/api/pages/${pageId}/verdict`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ verdict, analyst, note: note ?? null }),
    });
  }

  snapshotUrl(pageId: string, digest: string): string {
    return `${this.baseUrl}/api/pages/${pageId}/snapshot/${digest}`;
  }

  async snapshotSource(pageId: string, digest: string): Promise<string> {
    const response = await this.fetchFn(this.snapshotUrl(pageId, digest));
    if (!response.ok) {
      throw new ApiError(response.status, `snapshot ${digest} unavailable`);
    }
    return await response.text();
  }
}
