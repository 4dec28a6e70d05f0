import { CatalogEngine, CatalogObject } from "../api.js";
import { clear, el } from "../dom.js";
import { ConsoleState } from "../state.js";

export function filterObjects(
  objects: CatalogObject[],
  island: string,
  engineId: string,
): CatalogObject[] {
  return objects.filter(
    (o) =>
      (island === "all" || o.island === island) &&
      (engineId === "all" || String(o.engine_id) === engineId),
  );
}

/** Tables over /catalog/engines and /catalog/objects with island/engine filters. */
export class CatalogPanel {
  private islandFilter: HTMLSelectElement;
  private engineFilter: HTMLSelectElement;
  private enginesTable: HTMLElement;
  private objectsTable: HTMLElement;
  private error: HTMLElement;
  private engines: CatalogEngine[] = [];
  private objects: CatalogObject[] = [];

  constructor(root: HTMLElement, private state: ConsoleState) {
    this.islandFilter = el("select", { "data-role": "island-filter" });
    for (const value of ["all", "relational", "array", "text"]) {
      this.islandFilter.append(el("option", { value }, [value]));
    }
    this.engineFilter = el("select", { "data-role": "engine-filter" });
    this.enginesTable = el("div", { "data-role": "engines" });
    this.objectsTable = el("div", { "data-role": "objects" });
    this.error = el("div", { class: "banner hidden", "data-role": "catalog-error" });
    const refresh = el("button", { "data-role": "refresh" }, ["refresh"]);
    refresh.addEventListener("click", () => void this.refresh());
    this.islandFilter.addEventListener("change", () => this.renderObjects());
    this.engineFilter.addEventListener("change", () => this.renderObjects());
    root.append(
      this.error,
      el("div", { class: "controls" }, [
        el("label", {}, ["island ", this.islandFilter]),
        el("label", {}, ["engine ", this.engineFilter]),
        refresh,
      ]),
      el("h3", {}, ["engines"]),
      this.enginesTable,
      el("h3", {}, ["objects"]),
      this.objectsTable,
    );
  }

  async refresh(): Promise<void> {
    try {
      this.engines = await this.state.api.catalogEngines();
      this.objects = await this.state.api.catalogObjects();
      this.error.classList.add("hidden");
    } catch (e) {
      this.error.textContent = `catalog unavailable: ${String(e)}`;
      this.error.classList.remove("hidden");
      return;
    }
    const selected = this.engineFilter.value || "all";
    clear(this.engineFilter);
    this.engineFilter.append(el("option", { value: "all" }, ["all"]));
    for (const engine of this.engines) {
      this.engineFilter.append(el("option", { value: String(engine.eid) }, [engine.name]));
    }
    this.engineFilter.value = [...this.engineFilter.options].some((o) => o.value === selected)
      ? selected
      : "all";
    this.renderEngines();
    this.renderObjects();
  }

  private renderEngines(): void {
    clear(this.enginesTable);
    const head = el("tr", {}, ["eid", "name", "kind", "address", "status"].map((h) => el("th", {}, [h])));
    const body = el("tbody");
    for (const engine of this.engines) {
      body.append(
        el("tr", {}, [
          el("td", {}, [String(engine.eid)]),
          el("td", {}, [engine.name]),
          el("td", {}, [engine.kind]),
          el("td", {}, [engine.address]),
          el("td", {}, [engine.status]),
        ]),
      );
    }
    this.enginesTable.append(el("table", {}, [el("thead", {}, [head]), body]));
  }

  private renderObjects(): void {
    clear(this.objectsTable);
    const filtered = filterObjects(this.objects, this.islandFilter.value || "all", this.engineFilter.value || "all");
    if (filtered.length === 0) {
      this.objectsTable.append(el("div", { class: "empty", "data-role": "empty" }, ["no objects"]));
      return;
    }
    const engineNames = new Map(this.engines.map((e) => [e.eid, e.name]));
    const head = el("tr", {}, ["oid", "name", "fields", "engine", "island", "temp"].map((h) => el("th", {}, [h])));
    const body = el("tbody", { "data-role": "object-rows" });
    for (const o of filtered) {
      body.append(
        el("tr", {}, [
          el("td", {}, [String(o.oid)]),
          el("td", {}, [o.name]),
          el("td", {}, [o.fields]),
          el("td", {}, [engineNames.get(o.engine_id) ?? String(o.engine_id)]),
          el("td", {}, [o.island]),
          el("td", {}, [o.is_temp ? "yes" : "no"]),
        ]),
      );
    }
    this.objectsTable.append(el("table", {}, [el("thead", {}, [head]), body]));
  }
}
