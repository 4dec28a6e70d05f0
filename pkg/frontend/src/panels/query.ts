import { ApiError, PlanStep, QueryResult } from "../api.js";
import { clear, el } from "../dom.js";
import { ConsoleState } from "../state.js";

export const ROWS_PER_PAGE = 100;

export function pageSlice<T>(rows: T[], page: number, per = ROWS_PER_PAGE): T[] {
  return rows.slice(page * per, (page + 1) * per);
}

export function pageCount(total: number, per = ROWS_PER_PAGE): number {
  return Math.max(1, Math.ceil(total / per));
}

/** The line/caret block rendered under a failing query, e.g. for 2:7:
 *      SELECT * FORM t
 *      ------^
 */
export function caretBlock(query: string, position: string): string {
  const [lineText, colText] = position.split(":");
  const line = Math.max(1, parseInt(lineText, 10) || 1);
  const col = Math.max(1, parseInt(colText, 10) || 1);
  const lines = query.split("\n");
  const shown = lines.slice(0, line);
  shown.push("-".repeat(col - 1) + "^");
  return shown.join("\n");
}

/** Steps shown in the plan list: only the execute/migrate work items. */
export function planListItems(steps: PlanStep[]): string[] {
  const out: string[] = [];
  for (const s of steps) {
    if (s.kind === "execute") {
      out.push(`execute on ${s.engine} (${s.island}) -> ${s.output}`);
    } else if (s.kind === "migrate") {
      out.push(`migrate ${s.source} -> ${s.temp} on ${s.dest_engine} (${s.dest_island})`);
    }
  }
  return out;
}

/**
 * Textarea + run button; renders the result table with client-side paging,
 * the server-reported timings, an optional explain step list, and parse
 * errors with a caret at the reported line/column.
 */
export class QueryPanel {
  readonly textarea: HTMLTextAreaElement;
  readonly runButton: HTMLButtonElement;
  readonly explainToggle: HTMLInputElement;
  private output: HTMLElement;
  private historyList: HTMLElement;
  private result: QueryResult | null = null;
  private page = 0;

  constructor(root: HTMLElement, private state: ConsoleState) {
    this.textarea = el("textarea", {
      rows: "5",
      placeholder: "bdrel(SELECT * FROM patients LIMIT 4)",
      "data-role": "query-input",
    });
    this.runButton = el("button", { class: "run", "data-role": "run" }, ["run"]);
    this.explainToggle = el("input", { type: "checkbox", "data-role": "explain-toggle" });
    this.output = el("div", { class: "query-output", "data-role": "output" });
    this.historyList = el("ul", { class: "history", "data-role": "history" });
    const controls = el("div", { class: "controls" }, [
      this.runButton,
      el("label", {}, [this.explainToggle, " explain"]),
    ]);
    root.append(this.textarea, controls, this.output, el("h3", {}, ["history"]), this.historyList);
    this.runButton.addEventListener("click", () => void this.run());
  }

  async run(): Promise<void> {
    const text = this.textarea.value;
    clear(this.output);
    if (!text.trim()) return;
    let explainList: HTMLElement | null = null;
    if (this.explainToggle.checked) {
      try {
        const plan = await this.state.api.explain(text);
        explainList = el(
          "ol",
          { class: "plan", "data-role": "plan" },
          planListItems(plan.steps).map((item) => el("li", {}, [item])),
        );
      } catch (e) {
        this.renderError(text, e);
        this.state.addHistory({ text, at: Date.now(), ok: false, summary: String(e) });
        return;
      }
    }
    try {
      const result = await this.state.api.query(text);
      this.result = result;
      this.page = 0;
      if (explainList) this.output.append(explainList);
      this.renderResult();
      const t = result.timings;
      const total = (t.parse_ms + t.plan_ms + t.execute_ms).toFixed(1);
      this.state.addHistory({
        text,
        at: Date.now(),
        ok: true,
        summary: `${result.rows.length} rows in ${total} ms`,
      });
    } catch (e) {
      if (explainList) this.output.append(explainList);
      this.renderError(text, e);
      this.state.addHistory({ text, at: Date.now(), ok: false, summary: String(e) });
    }
    this.renderHistory();
  }

  private renderResult(): void {
    const result = this.result;
    if (!result) return;
    const old = this.output.querySelector("[data-role=result]");
    if (old) old.remove();
    const container = el("div", { "data-role": "result" });
    const t = result.timings;
    container.append(
      el("div", { class: "timings", "data-role": "timings" }, [
        `parse ${t.parse_ms} ms · plan ${t.plan_ms} ms · execute ${t.execute_ms} ms`,
      ]),
    );
    const head = el("tr", {}, []);
    for (const field of result.schema) {
      head.append(el("th", {}, [`${field.name}`]));
    }
    const body = el("tbody", { "data-role": "rows" });
    for (const row of pageSlice(result.rows, this.page)) {
      const tr = el("tr");
      for (const v of row) {
        tr.append(el("td", {}, [v === null ? "∅" : String(v)]));
      }
      body.append(tr);
    }
    container.append(el("table", { class: "result" }, [el("thead", {}, [head]), body]));
    const pages = pageCount(result.rows.length);
    if (pages > 1) {
      const prev = el("button", { "data-role": "prev" }, ["prev"]);
      const next = el("button", { "data-role": "next" }, ["next"]);
      const label = el("span", { "data-role": "page" }, [
        `page ${this.page + 1}/${pages} · ${result.rows.length} rows`,
      ]);
      prev.addEventListener("click", () => {
        if (this.page > 0) {
          this.page -= 1;
          this.renderResult();
        }
      });
      next.addEventListener("click", () => {
        if (this.page < pages - 1) {
          this.page += 1;
          this.renderResult();
        }
      });
      container.append(el("div", { class: "pager" }, [prev, label, next]));
    }
    this.output.append(container);
  }

  private renderError(text: string, e: unknown): void {
    const pane = el("div", { class: "error-pane", "data-role": "error" });
    if (e instanceof ApiError) {
      pane.append(el("div", { class: "error-message" }, [e.payload.error]));
      if (e.payload.position) {
        pane.append(
          el("pre", { class: "caret", "data-role": "caret" }, [
            caretBlock(text, e.payload.position),
          ]),
        );
      }
      if (e.payload.engine) {
        pane.append(el("div", { class: "error-engine" }, [`engine: ${e.payload.engine}`]));
      }
    } else {
      pane.append(el("div", { class: "error-message" }, [String(e)]));
    }
    this.output.append(pane);
  }

  private renderHistory(): void {
    clear(this.historyList);
    for (const entry of [...this.state.history].reverse()) {
      const item = el("li", { class: entry.ok ? "ok" : "failed" }, [
        el("code", {}, [entry.text.length > 80 ? entry.text.slice(0, 77) + "..." : entry.text]),
        el("span", {}, [` — ${entry.summary}`]),
      ]);
      item.addEventListener("click", () => {
        this.textarea.value = entry.text;
      });
      this.historyList.append(item);
    }
  }
}
