// DOM glue: state from the URL, data from the API, views from render.ts.
// Refresh is polling-based (30s); a failed poll shows the banner and keeps
// the last good data on screen, marked stale.

import { ApiClient } from "./api.js";
import { parseState, stateToQuery, type ViewState } from "./state.js";
import {
  renderConnectionBanner,
  renderDetail,
  renderQueue,
  visibleItems,
  type SnapshotView,
} from "./render.js";
import type { PageList, Timeline, VerdictValue } from "./types.js";

const POLL_MS = 30_000;

class App {
  private state: ViewState;
  private list: PageList | null = null;
  private timeline: Timeline | null = null;
  private snapshotView: SnapshotView = { digest: null, mode: "render", sourceHtml: null };
  private error: string | null = null;
  private lastGood: string | null = null;
  private analystName = "";
  private draftNote = "";

  constructor(
    private root: HTMLElement,
    private api: ApiClient = new ApiClient(),
  ) {
    this.state = parseState(window.location.search);
  }

  async start(): Promise<void> {
    this.root.addEventListener("click", (event) => this.onClick(event));
    this.root.addEventListener("change", (event) => this.onChange(event));
    this.root.addEventListener("input", (event) => this.onInput(event));
    document.addEventListener("keydown", (event) => this.onKey(event));
    window.addEventListener("popstate", () => {
      this.state = parseState(window.location.search);
      void this.refresh();
    });
    await this.refresh();
    window.setInterval(() => void this.refresh(), POLL_MS);
  }

  private pushState(update: Partial<ViewState>): void {
    this.state = { ...this.state, ...update };
    window.history.pushState(null, "", stateToQuery(this.state) || location.pathname);
  }

  private async refresh(): Promise<void> {
    try {
      this.list = await this.api.listPages(this.state);
      this.timeline = this.state.selected
        ? await this.api.timeline(this.state.selected)
        : null;
      if (this.timeline && this.snapshotView.mode === "source") {
        await this.loadSnapshotSource();
      }
      this.error = null;
      this.lastGood = new Date().toISOString();
    } catch (error) {
      this.error = error instanceof Error ? error.message : String(error);
    }
    this.render();
  }

  private async loadSnapshotSource(): Promise<void> {
    if (!this.timeline || this.timeline.snapshots.length === 0) return;
    const digest =
      this.snapshotView.digest ??
      this.timeline.snapshots[this.timeline.snapshots.length - 1].content_digest;
    try {
      this.snapshotView.sourceHtml = await this.api.snapshotSource(
        this.timeline.page.page_id,
        digest,
      );
    } catch (error) {
      // render failures fall back to the (escaped) source view message
      this.snapshotView.sourceHtml = `snapshot unavailable: ${String(error)}`;
    }
  }

  private render(): void {
    const banner = renderConnectionBanner(this.error, this.lastGood);
    if (this.timeline) {
      this.root.innerHTML =
        banner +
        renderDetail(
          this.timeline,
          (pageId, digest) => this.api.snapshotUrl(pageId, digest),
          this.snapshotView,
          this.draftNote,
        );
      const analyst = this.root.querySelector<HTMLInputElement>('[data-field="analyst"]');
      if (analyst) analyst.value = this.analystName;
      return;
    }
    if (this.list) {
      this.root.innerHTML = banner + renderQueue(this.list, this.state);
      return;
    }
    this.root.innerHTML = banner + '<p class="empty">loading…</p>';
  }

  private onClick(event: Event): void {
    const target = (event.target as HTMLElement).closest<HTMLElement>("[data-action]");
    if (!target) return;
    const action = target.dataset["action"];
    if (action === "open") {
      void this.openPage(target.dataset["pageId"] ?? null);
    } else if (action === "back") {
      this.pushState({ selected: null });
      this.timeline = null;
      void this.refresh();
    } else if (action === "goto-page") {
      this.pushState({ page: Number(target.dataset["page"] ?? "1") });
      void this.refresh();
    } else if (action === "snapshot-mode") {
      const mode = target.dataset["mode"] === "source" ? "source" : "render";
      this.snapshotView = { ...this.snapshotView, mode };
      if (mode === "source" && this.snapshotView.sourceHtml === null) {
        void this.loadSnapshotSource().then(() => this.render());
      }
      this.render();
    } else if (action === "verdict") {
      void this.submitVerdict(target.dataset["verdict"] as VerdictValue);
    }
  }

  private onChange(event: Event): void {
    const target = event.target as HTMLElement;
    const action = target.dataset["action"];
    if (action === "filter" && target instanceof HTMLSelectElement) {
      this.pushState({
        [target.name]: target.value || null,
        page: 1,
      } as Partial<ViewState>);
      void this.refresh();
    } else if (action === "active-only" && target instanceof HTMLInputElement) {
      this.pushState({ activeOnly: target.checked, page: 1 });
      this.render();
    } else if (action === "pick-snapshot" && target instanceof HTMLSelectElement) {
      this.snapshotView = { digest: target.value, mode: this.snapshotView.mode, sourceHtml: null };
      if (this.snapshotView.mode === "source") {
        void this.loadSnapshotSource().then(() => this.render());
      } else {
        this.render();
      }
    }
  }

  private onInput(event: Event): void {
    const target = event.target as HTMLInputElement;
    if (target.dataset["field"] === "analyst") {
      this.analystName = target.value;
    } else if (target.dataset["field"] === "note") {
      this.draftNote = target.value;
    }
  }

  private onKey(event: KeyboardEvent): void {
    if (event.target instanceof HTMLInputElement || event.target instanceof HTMLSelectElement) {
      return;
    }
    if (this.timeline) {
      if (event.key === "Escape") {
        this.pushState({ selected: null });
        this.timeline = null;
        void this.refresh();
      }
      return;
    }
    if (!this.list) return;
    const items = visibleItems(this.list, this.state);
    if (items.length === 0) return;
    const index = items.findIndex((item) => item.page_id === this.state.selected);
    if (event.key === "j" || event.key === "ArrowDown") {
      const next = items[Math.min(index + 1, items.length - 1)];
      this.pushState({ selected: next.page_id });
      this.render();
    } else if (event.key === "k" || event.key === "ArrowUp") {
      const previous = items[Math.max(index - 1, 0)];
      this.pushState({ selected: previous.page_id });
      this.render();
    } else if (event.key === "Enter" && this.state.selected) {
      void this.openPage(this.state.selected);
    }
  }

  private async openPage(pageId: string | null): Promise<void> {
    if (!pageId) return;
    this.pushState({ selected: pageId });
    this.snapshotView = { digest: null, mode: "render", sourceHtml: null };
    await this.refresh();
  }

  private async submitVerdict(verdict: VerdictValue): Promise<void> {
    if (!this.timeline) return;
    const analyst = this.analystName.trim();
    if (!analyst) {
      this.error = "analyst name required for a verdict";
      this.render();
      return;
    }
    const pageId = this.timeline.page.page_id;
    try {
      const record = await this.api.postVerdict(pageId, verdict, analyst, this.draftNote || undefined);
      // optimistic update; the next poll reconciles with the server
      this.timeline.page.verdict = record;
      if (verdict === "false_positive") {
        this.timeline.page.monitoring = "stopped_false_positive";
      }
      this.draftNote = "";
      this.render();
      void this.refresh();
    } catch (error) {
      this.error = error instanceof Error ? error.message : String(error);
      this.render();
    }
  }
}

const mount = document.getElementById("app");
if (mount) {
  const app = new App(mount);
  void app.start();
}

export { App };
