/**
 * Planner state and its pure reducers.
 *
 * Edits stay local until "Simulate" submits the exact payload built from
 * this state; any edit afterwards marks the affected results stale so
 * the UI can flag that the charts no longer match the editor.
 */

import {
  EventType,
  SCALED_TYPES,
  ScenarioEvent,
  SimulationRequest,
  SimulationResponse,
} from "./schema.js";

export interface PlannerEvent extends ScenarioEvent {
  id: string;
}

export interface ScenarioEdit {
  name: string;
  events: PlannerEvent[];
}

export interface ResultPair {
  response: SimulationResponse;
  /** canonical JSON of the request that produced the response */
  requestKey: string;
  stale: boolean;
}

export interface PlannerState {
  modelId: string | null;
  /** first forecast day (ISO), i.e. the day after the model's training window */
  origin: string | null;
  horizon: number;
  baseline: ScenarioEdit;
  alternatives: ScenarioEdit[];
  /** latest result pair per alternative name */
  results: Record<string, ResultPair>;
  nextEventId: number;
}

export type ScenarioRef = "baseline" | number;

export function initialState(): PlannerState {
  return {
    modelId: null,
    origin: null,
    horizon: 30,
    baseline: { name: "baseline", events: [] },
    alternatives: [{ name: "alternative 1", events: [] }],
    results: {},
    nextEventId: 1,
  };
}

export function addDays(iso: string, days: number): string {
  const d = new Date(iso + "T00:00:00Z");
  d.setUTCDate(d.getUTCDate() + days);
  return d.toISOString().slice(0, 10);
}

export function windowDates(state: PlannerState): string[] {
  if (state.origin === null) return [];
  return Array.from({ length: state.horizon }, (_, i) => addDays(state.origin as string, i));
}

function inWindow(state: PlannerState, date: string): boolean {
  if (state.origin === null) return false;
  const last = addDays(state.origin, state.horizon - 1);
  return date >= state.origin && date <= last;
}

function clampDate(state: PlannerState, date: string): string {
  if (state.origin === null) return date;
  const last = addDays(state.origin, state.horizon - 1);
  if (date < state.origin) return state.origin;
  if (date > last) return last;
  return date;
}

export function defaultScale(type: EventType): number {
  return SCALED_TYPES.includes(type) ? 1 : 0;
}

function scenario(state: PlannerState, ref: ScenarioRef): ScenarioEdit {
  if (ref === "baseline") return state.baseline;
  const alt = state.alternatives[ref];
  if (alt === undefined) throw new Error(`no alternative at index ${ref}`);
  return alt;
}

function replaceScenario(
  state: PlannerState,
  ref: ScenarioRef,
  next: ScenarioEdit,
): PlannerState {
  const touched = ref === "baseline" ? null : next.name;
  const results: Record<string, ResultPair> = {};
  for (const [name, pair] of Object.entries(state.results)) {
    // baseline edits invalidate every pair; scenario edits only their own
    const stale = pair.stale || touched === null || touched === name;
    results[name] = { ...pair, stale };
  }
  if (ref === "baseline") {
    return { ...state, baseline: next, results };
  }
  const alternatives = state.alternatives.slice();
  alternatives[ref] = next;
  return { ...state, alternatives, results };
}

export function selectModel(
  state: PlannerState,
  modelId: string,
  trainingWindowEnd: string,
): PlannerState {
  const origin = addDays(trainingWindowEnd, 1);
  // a different forecast window invalidates every displayed result
  const results: Record<string, ResultPair> = {};
  for (const [name, pair] of Object.entries(state.results)) {
    results[name] = { ...pair, stale: true };
  }
  return { ...state, modelId, origin, results };
}

export function setHorizon(state: PlannerState, horizon: number): PlannerState {
  const clamped = Math.min(Math.max(Math.round(horizon), 1), 90);
  const results: Record<string, ResultPair> = {};
  for (const [name, pair] of Object.entries(state.results)) {
    results[name] = { ...pair, stale: true };
  }
  return { ...state, horizon: clamped, results };
}

export function addAlternative(state: PlannerState, name: string): PlannerState {
  if (state.alternatives.some((a) => a.name === name) || name === state.baseline.name) {
    throw new Error(`scenario name "${name}" is already taken`);
  }
  return { ...state, alternatives: [...state.alternatives, { name, events: [] }] };
}

export function addEvent(
  state: PlannerState,
  ref: ScenarioRef,
  event: { date: string; type: EventType; subtype?: string; scale?: number },
): PlannerState {
  const target = scenario(state, ref);
  const type = event.type;
  const record: PlannerEvent = {
    id: `e${state.nextEventId}`,
    date: clampDate(state, event.date),
    type,
    subtype: type === "game_event" ? event.subtype || "event" : event.subtype ?? "",
    scale: SCALED_TYPES.includes(type)
      ? Math.min(Math.max(event.scale ?? 1, 1), 4)
      : 0,
  };
  const next = { ...target, events: [...target.events, record] };
  return { ...replaceScenario(state, ref, next), nextEventId: state.nextEventId + 1 };
}

export function removeEvent(state: PlannerState, ref: ScenarioRef, id: string): PlannerState {
  const target = scenario(state, ref);
  const next = { ...target, events: target.events.filter((e) => e.id !== id) };
  return replaceScenario(state, ref, next);
}

export function moveEvent(
  state: PlannerState,
  ref: ScenarioRef,
  id: string,
  date: string,
): PlannerState {
  const target = scenario(state, ref);
  const next = {
    ...target,
    events: target.events.map((e) => (e.id === id ? { ...e, date: clampDate(state, date) } : e)),
  };
  return replaceScenario(state, ref, next);
}

export function setEventScale(
  state: PlannerState,
  ref: ScenarioRef,
  id: string,
  scale: number,
): PlannerState {
  const target = scenario(state, ref);
  const next = {
    ...target,
    events: target.events.map((e) => {
      if (e.id !== id) return e;
      if (!SCALED_TYPES.includes(e.type)) return e; // star control only applies to scaled types
      return { ...e, scale: Math.min(Math.max(Math.round(scale), 1), 4) };
    }),
  };
  return replaceScenario(state, ref, next);
}

function stripIds(edit: ScenarioEdit): { name: string; events: ScenarioEvent[] } {
  return {
    name: edit.name,
    events: edit.events.map(({ date, type, subtype, scale }) => ({ date, type, subtype, scale })),
  };
}

export function buildSimulationRequest(
  state: PlannerState,
  ref: ScenarioRef,
): SimulationRequest {
  if (state.modelId === null || state.origin === null) {
    throw new Error("select a model before simulating");
  }
  // ref "baseline" simulates the unchanged baseline against itself
  const alt = ref === "baseline" ? state.baseline : scenario(state, ref);
  for (const event of [...state.baseline.events, ...alt.events]) {
    if (!inWindow(state, event.date)) {
      throw new Error(`event on ${event.date} is outside the simulation window`);
    }
  }
  return {
    model_id: state.modelId,
    horizon: state.horizon,
    baseline: stripIds(state.baseline),
    alternative: stripIds(alt),
  };
}

export function requestKey(request: SimulationRequest): string {
  return JSON.stringify(request);
}

export function applyResults(
  state: PlannerState,
  altName: string,
  response: SimulationResponse,
  key: string,
): PlannerState {
  return {
    ...state,
    results: { ...state.results, [altName]: { response, requestKey: key, stale: false } },
  };
}
