/** The contextual search console.
 *
 * One active session per tab. Every rendered value (recommendations,
 * query preview, counters, hit lists) comes straight from the service;
 * after each action the metrics panel is re-read from GET .../metrics
 * so the displayed counters always equal the service's.
 */

import {
  ApiClient,
  ApiError,
  Hit,
  MetricsPayload,
  StagePayload,
} from "./api.js";

const PHASES = ["OS1", "OS2", "OS3"] as const;
const METRIC_FIELDS = ["queries", "clicks", "hits", "urls", "elapsed_ms"] as const;

type Opener = (url: string) => void;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  if (text) {
    node.textContent = text;
  }
  return node;
}

export class SearchConsole {
  private sessionId: string | null = null;
  private phase = "OS1";
  private page = 1;

  constructor(
    private root: HTMLElement,
    private client: ApiClient,
    private opener: Opener = (url) => {
      window.open(url, "_blank");
    },
  ) {
    this.mount();
  }

  private byId(testId: string): HTMLElement {
    const node = this.root.querySelector(`[data-testid="${testId}"]`);
    if (!node) {
      throw new Error(`missing element ${testId}`);
    }
    return node as HTMLElement;
  }

  private mount(): void {
    this.root.innerHTML = "";

    const setup = el("section", { "data-testid": "setup" });
    setup.append(
      el("label", {}, "User "),
      el("input", { "data-testid": "user-input", value: "demo" }),
      el("label", {}, " Phase "),
    );
    const phaseSelect = el("select", { "data-testid": "phase-select" });
    for (const phase of PHASES) {
      phaseSelect.append(el("option", { value: phase }, phase));
    }
    setup.append(
      phaseSelect,
      el("label", {}, " Task "),
      el("input", { "data-testid": "task-input", value: "" }),
    );
    const startButton = el("button", { "data-testid": "start-button" }, "Start session");
    startButton.addEventListener("click", () => void this.startSession());
    setup.append(startButton);

    const error = el("p", { "data-testid": "error", hidden: "" });

    const session = el("section", { "data-testid": "session", hidden: "" });
    const indicator = el("p", {});
    indicator.append(
      el("span", {}, "Stage: "),
      el("strong", { "data-testid": "stage-indicator" }, ""),
    );
    const queryRow = el("p", {});
    const queryInput = el("input", { "data-testid": "query-input", placeholder: "search query" });
    const queryButton = el("button", { "data-testid": "query-button" }, "Search");
    queryButton.addEventListener("click", () => void this.submitQuery(queryInput.value));
    queryRow.append(queryInput, queryButton);
    const preview = el("p", {});
    preview.append(
      el("span", {}, "Query: "),
      el("code", { "data-testid": "query-preview" }, ""),
    );
    const stage = el("div", { "data-testid": "stage" });
    const results = el("div", { "data-testid": "results" });

    const metrics = el("dl", { "data-testid": "metrics" });
    for (const field of METRIC_FIELDS) {
      metrics.append(
        el("dt", {}, field),
        el("dd", { "data-testid": `metric-${field}` }, "-"),
      );
    }
    const completeRow = el("p", {});
    const foundButton = el("button", { "data-testid": "complete-found" }, "Found it");
    foundButton.addEventListener("click", () => void this.complete(true));
    const notFoundButton = el("button", { "data-testid": "complete-notfound" }, "Give up");
    notFoundButton.addEventListener("click", () => void this.complete(false));
    completeRow.append(foundButton, notFoundButton);
    session.append(indicator, queryRow, preview, stage, results, metrics, completeRow);

    const inspector = el("section", { "data-testid": "inspector" });
    const inspectorInput = el("input", { "data-testid": "inspector-user", placeholder: "user id" });
    const inspectorButton = el("button", { "data-testid": "inspector-load" }, "Load profile");
    inspectorButton.addEventListener(
      "click",
      () => void this.loadProfile(inspectorInput.value),
    );
    const profilePanel = el("div", { "data-testid": "profile-panel" });
    const sckbPanel = el("div", { "data-testid": "sckb-panel", hidden: "" });
    inspector.append(
      el("h2", {}, "Profiles"),
      inspectorInput,
      inspectorButton,
      profilePanel,
      sckbPanel,
    );

    this.root.append(setup, error, session, inspector);
  }

  private async guard(action: () => Promise<void>): Promise<void> {
    const error = this.byId("error");
    error.hidden = true;
    error.textContent = "";
    try {
      await action();
    } catch (err) {
      if (err instanceof ApiError) {
        error.hidden = false;
        error.textContent = `Request failed: ${err.message}`;
        await this.refreshMetrics();
        return;
      }
      throw err;
    }
  }

  async startSession(): Promise<void> {
    await this.guard(async () => {
      const user = (this.byId("user-input") as HTMLInputElement).value;
      const phase = (this.byId("phase-select") as HTMLSelectElement).value;
      const task = (this.byId("task-input") as HTMLInputElement).value;
      const info = await this.client.createSession(user, phase, task);
      this.sessionId = info.session_id;
      this.phase = info.phase;
      this.byId("session").hidden = false;
      this.byId("stage-indicator").textContent = info.state;
      this.byId("stage").innerHTML = "";
      this.byId("results").innerHTML = "";
      this.byId("query-preview").textContent = "";
      await this.refreshMetrics();
      await this.refreshSckbPanel(info.sckb_enabled);
    });
  }

  async submitQuery(query: string): Promise<void> {
    await this.guard(async () => {
      const payload = await this.client.submitQuery(this.requireSession(), query);
      this.renderPayload(payload);
      await this.refreshMetrics();
    });
  }

  async applySelection(stage: string, chosen: string[]): Promise<void> {
    await this.guard(async () => {
      const payload = await this.client.applySelection(this.requireSession(), stage, chosen);
      this.renderPayload(payload);
      await this.refreshMetrics();
    });
  }

  async clickHit(url: string): Promise<void> {
    await this.guard(async () => {
      this.opener(url);
      await this.client.reportClick(this.requireSession(), url);
      await this.refreshMetrics();
    });
  }

  async nextPage(): Promise<void> {
    await this.guard(async () => {
      const payload = await this.client.getResults(this.requireSession(), this.page + 1);
      this.renderPayload(payload);
      await this.refreshMetrics();
    });
  }

  async complete(found: boolean): Promise<void> {
    await this.guard(async () => {
      const result = await this.client.complete(this.requireSession(), found);
      this.byId("stage-indicator").textContent = result.state;
      this.byId("stage").innerHTML = "";
      this.renderMetrics(result);
      // completed sessions reject further reads; keep the final numbers
    });
  }

  async loadProfile(userId: string): Promise<void> {
    const panel = this.byId("profile-panel");
    panel.innerHTML = "";
    try {
      const profile = await this.client.getProfile(userId);
      const heading = el(
        "p",
        {},
        `${profile.user_id}: ${profile.entry_count} recorded interactions`,
      );
      const list = el("ul", { "data-testid": "profile-entries" });
      for (const entry of profile.entries) {
        list.append(
          el(
            "li",
            {},
            `${entry.raw_query} (keywords: ${entry.query_keywords.join(", ")}; ` +
              `clicks: ${entry.clicked_urls.length})`,
          ),
        );
      }
      panel.append(heading, list);
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) {
        panel.append(el("p", { "data-testid": "profile-empty" }, "No profile recorded yet."));
        return;
      }
      throw err;
    }
  }

  private async refreshSckbPanel(sessionSckbEnabled: boolean): Promise<void> {
    const panel = this.byId("sckb-panel");
    panel.innerHTML = "";
    // profile-only and baseline phases hide the shared-knowledge panel
    if (!sessionSckbEnabled || this.phase !== "OS2") {
      panel.hidden = true;
      return;
    }
    const stats = await this.client.getSckbStats();
    if (!stats.enabled) {
      panel.hidden = true;
      return;
    }
    panel.hidden = false;
    panel.append(
      el(
        "p",
        {},
        `Shared knowledge base: ${stats.entry_count} entries from ` +
          `${stats.contributor_total} contributions`,
      ),
    );
  }

  private requireSession(): string {
    if (!this.sessionId) {
      throw new Error("no active session");
    }
    return this.sessionId;
  }

  private renderPayload(payload: StagePayload): void {
    this.byId("stage-indicator").textContent = payload.state;
    const preview = payload.query_preview ?? payload.query ?? "";
    this.byId("query-preview").textContent = preview;
    if (payload.stage === "results") {
      this.page = payload.page ?? 1;
      this.byId("stage").innerHTML = "";
      this.renderResults(payload.hits ?? []);
    } else if (payload.stage) {
      this.byId("results").innerHTML = "";
      this.renderStage(payload);
    }
  }

  private renderStage(payload: StagePayload): void {
    const container = this.byId("stage");
    container.innerHTML = "";
    const stage = payload.stage as string;
    container.append(el("h3", {}, `Recommended ${stage}`));
    const form = el("div", {});
    const addOption = (id: string, label: string) => {
      const row = el("label", { style: "display:block" });
      const box = el("input", { type: "checkbox", value: id, "data-testid": "option" });
      row.append(box, el("span", {}, ` ${label}`));
      form.append(row);
    };
    if (stage === "senses") {
      for (const [keyword, candidates] of Object.entries(payload.senses ?? {})) {
        form.append(el("h4", {}, keyword));
        for (const candidate of candidates) {
          addOption(
            candidate.id,
            `${candidate.words.join(" ")} [${candidate.source}, ${candidate.score.toFixed(3)}]`,
          );
        }
      }
    } else if (stage === "metas") {
      for (const candidate of payload.meta_keywords ?? []) {
        addOption(
          candidate.id,
          `${candidate.words.join(" ")} [${candidate.source}, ${candidate.score.toFixed(3)}]`,
        );
      }
    } else {
      for (const candidate of payload.concepts ?? []) {
        addOption(candidate.id, `${candidate.label} (${candidate.related_terms.join(", ")})`);
      }
    }
    container.append(form);
    const apply = el("button", { "data-testid": "apply" }, "Apply selection");
    apply.addEventListener("click", () => {
      const chosen = Array.from(
        form.querySelectorAll<HTMLInputElement>("input[type=checkbox]:checked"),
      ).map((box) => box.value);
      void this.applySelection(stage, chosen);
    });
    const skip = el("button", { "data-testid": "skip" }, "Skip");
    skip.addEventListener("click", () => void this.applySelection(stage, []));
    container.append(apply, skip);
  }

  private renderResults(hits: Hit[]): void {
    const container = this.byId("results");
    container.innerHTML = "";
    container.append(el("h3", {}, `Results (page ${this.page})`));
    if (hits.length === 0) {
      container.append(el("p", {}, "No results."));
    }
    const list = el("ol", {});
    for (const hit of hits) {
      const item = el("li", {});
      const link = el(
        "a",
        { href: hit.url, target: "_blank", "data-testid": "hit", "data-url": hit.url },
        `${hit.title || hit.url}`,
      );
      link.addEventListener("click", (event) => {
        event.preventDefault();
        void this.clickHit(hit.url);
      });
      item.append(link, el("span", {}, ` — ${hit.url} (rank ${hit.rank})`));
      list.append(item);
    }
    container.append(list);
    const more = el("button", { "data-testid": "next-page" }, "Next page");
    more.addEventListener("click", () => void this.nextPage());
    container.append(more);
  }

  private renderMetrics(payload: MetricsPayload): void {
    for (const field of METRIC_FIELDS) {
      const value = payload.metrics[field];
      this.byId(`metric-${field}`).textContent = value === null ? "-" : String(value);
    }
  }

  async refreshMetrics(): Promise<void> {
    if (!this.sessionId) {
      return;
    }
    this.renderMetrics(await this.client.getMetrics(this.sessionId));
  }
}

export function mountConsole(root: HTMLElement, baseUrl: string): SearchConsole {
  return new SearchConsole(root, new ApiClient(baseUrl));
}
