import { clear, el } from "./dom.js";
import { CatalogPanel } from "./panels/catalog.js";
import { QueryPanel } from "./panels/query.js";
import { StatusPanel } from "./panels/status.js";
import { ConsoleState } from "./state.js";

/** Wire the three panels plus the endpoint control into a tabbed page. */
export function mountApp(root: HTMLElement, endpoint?: string): {
  state: ConsoleState;
  status: StatusPanel;
  query: QueryPanel;
  catalog: CatalogPanel;
} {
  const state = new ConsoleState(endpoint);

  const endpointInput = el("input", {
    type: "text",
    value: state.endpoint,
    "data-role": "endpoint",
  });
  const apply = el("button", {}, ["connect"]);
  const header = el("header", {}, [
    el("h1", {}, ["polygate console"]),
    el("div", { class: "endpoint" }, [el("label", {}, ["gateway "]), endpointInput, apply]),
  ]);

  const tabs = el("nav", { class: "tabs" });
  const panes: Record<string, HTMLElement> = {
    status: el("section", { class: "pane", "data-pane": "status" }),
    query: el("section", { class: "pane hidden", "data-pane": "query" }),
    catalog: el("section", { class: "pane hidden", "data-pane": "catalog" }),
  };
  for (const name of Object.keys(panes)) {
    const button = el("button", { "data-tab": name }, [name]);
    button.addEventListener("click", () => {
      for (const [paneName, pane] of Object.entries(panes)) {
        pane.classList.toggle("hidden", paneName !== name);
      }
      if (name === "catalog") void catalog.refresh();
    });
    tabs.append(button);
  }

  clear(root);
  root.append(header, tabs, panes.status, panes.query, panes.catalog);

  const status = new StatusPanel(panes.status, state);
  const query = new QueryPanel(panes.query, state);
  const catalog = new CatalogPanel(panes.catalog, state);

  apply.addEventListener("click", () => {
    state.setEndpoint(endpointInput.value.trim());
    status.stop();
    status.start();
    void catalog.refresh();
  });

  status.start();
  return { state, status, query, catalog };
}

declare global {
  interface Window {
    polygateConsole?: ReturnType<typeof mountApp>;
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  window.polygateConsole = mountApp(document.getElementById("app") as HTMLElement);
}
