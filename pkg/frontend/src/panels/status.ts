import { EngineStatus, StatusPayload } from "../api.js";
import { clear, el } from "../dom.js";
import { ConsoleState } from "../state.js";

const MAX_BACKOFF_MS = 10000;

/**
 * Per-engine cards refreshed by polling GET /status (default every 2 s).
 * Losing the gateway shows a banner and retries with doubling backoff;
 * card-level admin failures render inline on the card, never blank the page.
 */
export class StatusPanel {
  readonly root: HTMLElement;
  private banner: HTMLElement;
  private cards: HTMLElement;
  private meta: HTMLElement;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private failures = 0;
  private cardErrors = new Map<string, string>();

  constructor(
    root: HTMLElement,
    private state: ConsoleState,
    private pollIntervalMs = 2000,
  ) {
    this.root = root;
    this.banner = el("div", { class: "banner hidden", "data-role": "banner" });
    this.cards = el("div", { class: "cards", "data-role": "cards" });
    this.meta = el("div", { class: "meta", "data-role": "meta" });
    root.append(this.banner, this.cards, this.meta);
  }

  start(): void {
    void this.tick();
  }

  stop(): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = null;
  }

  /** One poll; schedules the next with backoff on failure. */
  async tick(): Promise<void> {
    try {
      const payload = await this.state.api.status();
      this.failures = 0;
      this.banner.classList.add("hidden");
      this.render(payload);
    } catch (e) {
      this.failures += 1;
      this.banner.textContent =
        `gateway unreachable at ${this.state.endpoint} (retrying): ${String(e)}`;
      this.banner.classList.remove("hidden");
    }
    const delay = Math.min(this.pollIntervalMs * 2 ** this.failures, MAX_BACKOFF_MS);
    this.timer = setTimeout(() => void this.tick(), this.failures ? delay : this.pollIntervalMs);
  }

  /** Refresh once, immediately (used after card actions and by tests). */
  async refresh(): Promise<void> {
    const payload = await this.state.api.status();
    this.render(payload);
  }

  private render(payload: StatusPayload): void {
    clear(this.cards);
    for (const engine of payload.engines) {
      this.cards.append(this.card(engine));
    }
    this.meta.textContent =
      `uptime ${payload.uptime_s}s · ${payload.queries_served} queries served`;
  }

  private card(engine: EngineStatus): HTMLElement {
    const action = engine.status === "up" ? "stop" : "start";
    const button = el("button", { "data-action": action }, [action]);
    button.addEventListener("click", () => void this.onAction(engine.name, action));
    const error = this.cardErrors.get(engine.name);
    const card = el(
      "div",
      { class: `card status-${engine.status}`, "data-engine": engine.name },
      [
        el("h3", {}, [engine.name]),
        el("span", { class: "kind" }, [engine.kind]),
        el("span", { class: "status", "data-role": "status" }, [engine.status]),
        el("span", { class: "objects" }, [`${engine.objects} objects`]),
        el("span", { class: "address" }, [engine.address]),
        button,
      ],
    );
    if (error) {
      card.append(el("div", { class: "card-error", "data-role": "card-error" }, [error]));
    }
    return card;
  }

  private async onAction(name: string, action: "start" | "stop"): Promise<void> {
    try {
      await this.state.api.engine(name, action);
      this.cardErrors.delete(name);
    } catch (e) {
      this.cardErrors.set(name, String(e));
    }
    try {
      await this.refresh();
    } catch {
      // the poll loop's banner handles gateway loss
    }
  }
}
