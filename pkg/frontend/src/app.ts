/**
 * DOM layer: renders the planner state and wires user interactions to
 * the pure reducers and the API client. All numbers shown come straight
 * from service responses held in state.
 */

import { ApiClient, ApiError } from "./api.js";
import { buildChart, ChartViewModel, deltaBadge } from "./chart.js";
import { EVENT_TYPES, EventType, ModelRecord, SCALED_TYPES } from "./schema.js";
import {
  addAlternative,
  addEvent,
  applyResults,
  buildSimulationRequest,
  initialState,
  moveEvent,
  PlannerState,
  removeEvent,
  requestKey,
  ScenarioRef,
  selectModel,
  setEventScale,
  setHorizon,
  windowDates,
} from "./state.js";

interface AppContext {
  state: PlannerState;
  client: ApiClient;
  models: ModelRecord[];
  activeTab: ScenarioRef;
  pickerType: EventType;
  pickerScale: number;
  history: { dates: string[]; values: number[] } | null;
  calendarEvents: { date: string; type: string; subtype: string }[];
  overlays: Record<string, boolean>;
  error: string;
  root: HTMLElement;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  children: (Node | string)[] = [],
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === "class") node.className = value;
    else node.setAttribute(key, value);
  }
  for (const child of children) node.append(child);
  return node;
}

function svgChart(vm: ChartViewModel): SVGSVGElement {
  const ns = "http://www.w3.org/2000/svg";
  const svg = document.createElementNS(ns, "svg");
  svg.setAttribute("viewBox", `0 0 ${vm.width} ${vm.height}`);
  svg.setAttribute("class", "chart");
  for (const marker of vm.markers) {
    const line = document.createElementNS(ns, "line");
    line.setAttribute("x1", String(marker.x));
    line.setAttribute("x2", String(marker.x));
    line.setAttribute("y1", "0");
    line.setAttribute("y2", String(vm.height));
    line.setAttribute("class", `marker marker-${marker.type}`);
    const title = document.createElementNS(ns, "title");
    title.textContent = marker.label;
    line.append(title);
    svg.append(line);
  }
  for (const series of vm.series) {
    const poly = document.createElementNS(ns, "polyline");
    poly.setAttribute("points", series.points);
    poly.setAttribute("fill", "none");
    poly.setAttribute("stroke", series.color);
    poly.setAttribute("stroke-width", "2");
    const title = document.createElementNS(ns, "title");
    title.textContent = series.name;
    poly.append(title);
    svg.append(poly);
  }
  return svg;
}

function scenarioOf(ctx: AppContext, ref: ScenarioRef) {
  return ref === "baseline" ? ctx.state.baseline : ctx.state.alternatives[ref]!;
}

function renderModelList(ctx: AppContext): HTMLElement {
  const panel = el("section", { class: "panel" }, [el("h2", {}, ["Models"])]);
  if (ctx.models.length === 0) {
    panel.append(
      el("p", { class: "empty" }, [
        "No trained models yet. Train one through the service or CLI, then reload.",
      ]),
    );
    return panel;
  }
  const rows = ctx.models.map((m) => {
    const row = el("li", { class: m.id === ctx.state.modelId ? "model selected" : "model" }, [
      el("span", { class: "family" }, [m.family]),
      el("span", {}, [`${m.game} / ${m.target}`]),
      el("span", { class: "muted" }, [`trained ${m.trained_at}`]),
    ]);
    row.addEventListener("click", () => {
      ctx.state = selectModel(ctx.state, m.id, m.training_window[1]);
      void loadHistory(ctx, m);
      render(ctx);
    });
    return row;
  });
  panel.append(el("ul", { class: "model-list" }, rows));
  return panel;
}

async function loadHistory(ctx: AppContext, model: ModelRecord): Promise<void> {
  try {
    const dataset = await ctx.client.getDataset(model.dataset_id);
    ctx.history = { dates: dataset.dates, values: dataset.values };
    const first = dataset.dates[0];
    const last = dataset.dates[dataset.dates.length - 1];
    ctx.calendarEvents =
      first && last ? await ctx.client.getCalendar(first, last) : [];
  } catch (err) {
    ctx.history = null;
    ctx.error = err instanceof Error ? err.message : String(err);
  }
  render(ctx);
}

function renderHistory(ctx: AppContext): HTMLElement {
  const panel = el("section", { class: "panel" }, [el("h2", {}, ["History"])]);
  if (!ctx.history) {
    panel.append(el("p", { class: "empty" }, ["Select a model to see its training series."]));
    return panel;
  }
  const toggles = el("div", { class: "toggles" });
  for (const type of EVENT_TYPES) {
    const label = el("label", {}, [type]);
    const box = el("input", { type: "checkbox" }) as HTMLInputElement;
    box.checked = ctx.overlays[type] ?? true;
    box.addEventListener("change", () => {
      ctx.overlays[type] = box.checked;
      render(ctx);
    });
    label.prepend(box);
    toggles.append(label);
  }
  panel.append(toggles);
  const vm = buildChart([{ name: "history", values: ctx.history.values }], historyMarkers(ctx));
  panel.append(svgChart(vm));
  return panel;
}

function historyMarkers(ctx: AppContext): { index: number; label: string; type: string }[] {
  if (!ctx.history) return [];
  const markers: { index: number; label: string; type: string }[] = [];
  const index = new Map(ctx.history.dates.map((d, i) => [d, i] as const));
  for (const event of ctx.calendarEvents) {
    if (!(ctx.overlays[event.type] ?? true)) continue;
    const i = index.get(event.date);
    if (i !== undefined) markers.push({ index: i, label: `${event.type} ${event.subtype}`, type: event.type });
  }
  return markers;
}

function renderPicker(ctx: AppContext): HTMLElement {
  const typeSelect = el("select") as HTMLSelectElement;
  for (const type of EVENT_TYPES) {
    typeSelect.append(el("option", { value: type }, [type]));
  }
  typeSelect.value = ctx.pickerType;
  typeSelect.addEventListener("change", () => {
    ctx.pickerType = typeSelect.value as EventType;
    render(ctx);
  });
  const wrap = el("div", { class: "picker" }, [el("span", {}, ["Add:"]), typeSelect]);
  if (SCALED_TYPES.includes(ctx.pickerType)) {
    wrap.append(renderStars(ctx.pickerScale, (scale) => {
      ctx.pickerScale = scale;
      render(ctx);
    }));
  }
  wrap.append(el("span", { class: "muted" }, ["then click a day"]));
  return wrap;
}

function renderStars(scale: number, onPick: (scale: number) => void): HTMLElement {
  const wrap = el("span", { class: "stars", title: "influence scale 1-4" });
  for (let s = 1; s <= 4; s++) {
    const star = el("button", { class: s <= scale ? "star on" : "star" }, ["★"]);
    star.addEventListener("click", (ev) => {
      ev.stopPropagation();
      onPick(s);
    });
    wrap.append(star);
  }
  return wrap;
}

function renderCalendar(ctx: AppContext): HTMLElement {
  const panel = el("section", { class: "panel" }, [el("h2", {}, ["Event planner"])]);
  if (ctx.state.origin === null) {
    panel.append(el("p", { class: "empty" }, ["Select a model to start planning its next window."]));
    return panel;
  }

  const tabs = el("div", { class: "tabs" });
  const refs: ScenarioRef[] = ["baseline", ...ctx.state.alternatives.map((_, i) => i)];
  for (const ref of refs) {
    const name = scenarioOf(ctx, ref).name;
    const tab = el("button", { class: ref === ctx.activeTab ? "tab active" : "tab" }, [name]);
    tab.addEventListener("click", () => {
      ctx.activeTab = ref;
      render(ctx);
    });
    tabs.append(tab);
  }
  const plus = el("button", { class: "tab" }, ["+ scenario"]);
  plus.addEventListener("click", () => {
    ctx.state = addAlternative(ctx.state, `alternative ${ctx.state.alternatives.length + 1}`);
    ctx.activeTab = ctx.state.alternatives.length - 1;
    render(ctx);
  });
  tabs.append(plus);
  panel.append(tabs, renderPicker(ctx));

  const grid = el("div", { class: "grid" });
  const active = scenarioOf(ctx, ctx.activeTab);
  for (const day of windowDates(ctx.state)) {
    const cell = el("div", { class: "day" }, [el("div", { class: "date" }, [day.slice(5)])]);
    cell.addEventListener("click", () => {
      ctx.state = addEvent(ctx.state, ctx.activeTab, {
        date: day,
        type: ctx.pickerType,
        scale: ctx.pickerScale,
      });
      render(ctx);
    });
    for (const event of active.events.filter((e) => e.date === day)) {
      const chip = el("span", { class: `chip chip-${event.type}`, draggable: "true" }, [
        `${event.type === "game_event" ? event.subtype : event.type}`,
      ]);
      chip.addEventListener("dragstart", (ev) => {
        (ev as DragEvent).dataTransfer?.setData("text/plain", event.id);
      });
      if (SCALED_TYPES.includes(event.type)) {
        chip.append(renderStars(event.scale, (scale) => {
          ctx.state = setEventScale(ctx.state, ctx.activeTab, event.id, scale);
          render(ctx);
        }));
      }
      const remove = el("button", { class: "remove", title: "remove" }, ["×"]);
      remove.addEventListener("click", (ev) => {
        ev.stopPropagation();
        ctx.state = removeEvent(ctx.state, ctx.activeTab, event.id);
        render(ctx);
      });
      chip.append(remove);
      chip.addEventListener("click", (ev) => ev.stopPropagation());
      cell.append(chip);
    }
    cell.addEventListener("dragover", (ev) => ev.preventDefault());
    cell.addEventListener("drop", (ev) => {
      ev.preventDefault();
      const id = (ev as DragEvent).dataTransfer?.getData("text/plain");
      if (id) {
        ctx.state = moveEvent(ctx.state, ctx.activeTab, id, day);
        render(ctx);
      }
    });
    grid.append(cell);
  }
  panel.append(grid);

  if (ctx.activeTab !== "baseline") {
    const simulate = el("button", { class: "simulate" }, ["Simulate"]);
    simulate.addEventListener("click", () => void runSimulation(ctx, ctx.activeTab as number));
    panel.append(simulate);
  }
  return panel;
}

async function runSimulation(ctx: AppContext, index: number): Promise<void> {
  ctx.error = "";
  let request;
  try {
    request = buildSimulationRequest(ctx.state, index);
  } catch (err) {
    ctx.error = err instanceof Error ? err.message : String(err);
    render(ctx);
    return;
  }
  const key = requestKey(request);
  const name = ctx.state.alternatives[index]!.name;
  try {
    const response = await ctx.client.simulate(request, name);
    ctx.state = applyResults(ctx.state, name, response, key);
  } catch (err) {
    if (err instanceof DOMException && err.name === "AbortError") return; // superseded click
    ctx.error =
      err instanceof ApiError && err.fieldPath
        ? `${err.message} (${err.fieldPath})`
        : err instanceof Error
          ? err.message
          : String(err);
  }
  render(ctx);
}

function renderResults(ctx: AppContext): HTMLElement {
  const panel = el("section", { class: "panel" }, [el("h2", {}, ["Forecast comparison"])]);
  const entries = Object.entries(ctx.state.results);
  if (entries.length === 0) {
    panel.append(el("p", { class: "empty" }, ["Simulate an alternative to compare forecasts."]));
    return panel;
  }
  for (const [name, pair] of entries) {
    const badge = deltaBadge(pair.response.alternative.delta_vs_baseline);
    const card = el("div", { class: pair.stale ? "result stale" : "result" }, [
      el("h3", {}, [
        name,
        el("span", { class: `badge ${badge.sign}` }, [badge.text]),
        pair.stale ? el("span", { class: "stale-flag" }, ["edited since last run"]) : "",
      ]),
    ]);
    const vm = buildChart([
      { name: "baseline", values: pair.response.baseline.values },
      { name, values: pair.response.alternative.values },
    ]);
    card.append(svgChart(vm));
    card.append(
      el("p", { class: "totals" }, [
        `baseline total ${pair.response.baseline.total.toFixed(0)} vs ${name} total ${pair.response.alternative.total.toFixed(0)}`,
      ]),
    );
    panel.append(card);
  }
  return panel;
}

export function render(ctx: AppContext): void {
  ctx.root.replaceChildren(
    el("header", {}, [
      el("h1", {}, ["Event planner"]),
      ctx.error ? el("p", { class: "error" }, [ctx.error]) : "",
      renderHorizonControl(ctx),
    ]),
    renderModelList(ctx),
    renderCalendar(ctx),
    renderResults(ctx),
    renderHistory(ctx),
  );
}

function renderHorizonControl(ctx: AppContext): HTMLElement {
  const input = el("input", { type: "number", min: "1", max: "90", value: String(ctx.state.horizon) }) as HTMLInputElement;
  input.addEventListener("change", () => {
    ctx.state = setHorizon(ctx.state, Number(input.value));
    render(ctx);
  });
  return el("label", { class: "horizon" }, ["Horizon (days): ", input]);
}

export async function start(root: HTMLElement, baseUrl: string): Promise<AppContext> {
  const ctx: AppContext = {
    state: initialState(),
    client: new ApiClient(baseUrl),
    models: [],
    activeTab: 0,
    pickerType: "gacha",
    pickerScale: 1,
    history: null,
    calendarEvents: [],
    overlays: {},
    error: "",
    root,
  };
  try {
    ctx.models = await ctx.client.listModels();
  } catch (err) {
    ctx.error = err instanceof Error ? err.message : String(err);
  }
  render(ctx);
  return ctx;
}
