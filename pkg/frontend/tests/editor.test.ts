import { describe, expect, it } from "vitest";

import { simulationRequestSchema } from "../src/schema.js";
import {
  addAlternative,
  addDays,
  addEvent,
  buildSimulationRequest,
  initialState,
  moveEvent,
  PlannerState,
  removeEvent,
  selectModel,
  setEventScale,
  setHorizon,
  windowDates,
} from "../src/state.js";

const TRAIN_END = "2024-03-31";

function freshState(): PlannerState {
  return selectModel(initialState(), "model-1", TRAIN_END);
}

function expectValid(state: PlannerState) {
  const request = buildSimulationRequest(state, 0);
  const parsed = simulationRequestSchema.safeParse(request);
  expect(parsed.success, JSON.stringify(parsed.success ? "" : parsed.error.issues)).toBe(true);
}

describe("scripted editor tour stays schema-valid", () => {
  it("every reachable state produces a valid simulation payload", () => {
    let state = freshState();
    expectValid(state);

    state = addEvent(state, 0, { date: "2024-04-03", type: "gacha" });
    expectValid(state);

    const gachaId = state.alternatives[0]!.events[0]!.id;
    state = setEventScale(state, 0, gachaId, 4);
    expectValid(state);

    state = addEvent(state, 0, { date: "2024-04-10", type: "game_event" });
    expectValid(state);

    state = moveEvent(state, 0, gachaId, "2024-04-07");
    expectValid(state);

    state = addEvent(state, "baseline", { date: "2024-04-05", type: "promotion", scale: 2 });
    expectValid(state);

    state = addEvent(state, 0, { date: "2024-04-20", type: "marketing" });
    expectValid(state);

    state = removeEvent(state, 0, gachaId);
    expectValid(state);

    state = addAlternative(state, "aggressive plan");
    state = addEvent(state, 1, { date: "2024-04-12", type: "holiday" });
    const request = buildSimulationRequest(state, 1);
    expect(simulationRequestSchema.safeParse(request).success).toBe(true);

    state = setHorizon(state, 45);
    state = addEvent(state, 0, { date: "2024-05-10", type: "gacha", scale: 3 });
    expectValid(state);
  });

  it("scale picks are clamped into 1..4 and unscaled types stay 0", () => {
    let state = freshState();
    state = addEvent(state, 0, { date: "2024-04-03", type: "gacha", scale: 9 });
    expect(state.alternatives[0]!.events[0]!.scale).toBe(4);
    state = addEvent(state, 0, { date: "2024-04-04", type: "holiday", scale: 3 });
    expect(state.alternatives[0]!.events[1]!.scale).toBe(0);
    const holidayId = state.alternatives[0]!.events[1]!.id;
    state = setEventScale(state, 0, holidayId, 4);
    expect(state.alternatives[0]!.events[1]!.scale).toBe(0);
    expectValid(state);
  });

  it("dates are clamped into the simulation window", () => {
    let state = freshState();
    state = addEvent(state, 0, { date: "2023-01-01", type: "gacha" });
    expect(state.alternatives[0]!.events[0]!.date).toBe("2024-04-01");
    state = moveEvent(state, 0, state.alternatives[0]!.events[0]!.id, "2031-01-01");
    expect(state.alternatives[0]!.events[0]!.date).toBe(addDays("2024-04-01", 29));
    expectValid(state);
  });

  it("window dates span origin to origin+horizon-1", () => {
    const state = freshState();
    const days = windowDates(state);
    expect(days.length).toBe(30);
    expect(days[0]).toBe("2024-04-01");
    expect(days[29]).toBe("2024-04-30");
  });

  it("move keeps the event payload date in sync with the drop target", () => {
    let state = freshState();
    state = addEvent(state, 0, { date: "2024-04-03", type: "gacha", scale: 2 });
    const id = state.alternatives[0]!.events[0]!.id;
    state = moveEvent(state, 0, id, "2024-04-17");
    const request = buildSimulationRequest(state, 0);
    expect(request.alternative.events[0]!.date).toBe("2024-04-17");
  });
});
