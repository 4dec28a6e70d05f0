import { Api } from "./api.js";

export interface HistoryEntry {
  text: string;
  at: number;
  ok: boolean;
  summary: string; // "N rows in X ms" or the error message
}

const ENDPOINT_KEY = "polygate.endpoint";
export const DEFAULT_ENDPOINT = "http://127.0.0.1:8080";

/** All console state; lives client-side only. History is append-only. */
export class ConsoleState {
  api: Api;
  private history_: HistoryEntry[] = [];

  constructor(endpoint?: string) {
    const stored =
      typeof localStorage !== "undefined" ? localStorage.getItem(ENDPOINT_KEY) : null;
    this.api = new Api(endpoint ?? stored ?? DEFAULT_ENDPOINT);
  }

  get endpoint(): string {
    return this.api.endpoint;
  }

  setEndpoint(url: string): void {
    this.api = new Api(url);
    if (typeof localStorage !== "undefined") {
      localStorage.setItem(ENDPOINT_KEY, url);
    }
  }

  get history(): readonly HistoryEntry[] {
    return this.history_;
  }

  addHistory(entry: HistoryEntry): void {
    this.history_.push(entry);
  }
}
