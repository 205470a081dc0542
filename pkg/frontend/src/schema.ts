/**
 * Zod mirror of the service's wire formats. Every payload the editor can
 * produce must pass these schemas before it is allowed near the network,
 * and every response is validated before anything renders.
 */

import { z } from "zod";

export const EVENT_TYPES = [
  "game_event",
  "gacha",
  "promotion",
  "marketing",
  "holiday",
] as const;

export type EventType = (typeof EVENT_TYPES)[number];

export const SCALED_TYPES: readonly EventType[] = ["gacha", "promotion"];

const isoDate = z.string().regex(/^\d{4}-\d{2}-\d{2}$/, "expected YYYY-MM-DD");

export const scenarioEventSchema = z
  .object({
    date: isoDate,
    type: z.enum(EVENT_TYPES),
    subtype: z.string(),
    scale: z.number().int().min(0).max(4),
  })
  .refine(
    (e) => (SCALED_TYPES.includes(e.type) ? e.scale >= 1 && e.scale <= 4 : e.scale === 0),
    { message: "gacha and promotions carry scale 1-4; other types carry 0" },
  )
  .refine((e) => e.type !== "game_event" || e.subtype.length > 0, {
    message: "game events need a subtype label",
  });

export const scenarioSchema = z.object({
  name: z.string().min(1),
  events: z.array(scenarioEventSchema),
});

export const simulationRequestSchema = z.object({
  model_id: z.string().min(1),
  horizon: z.number().int().min(1).max(90),
  baseline: scenarioSchema,
  alternative: scenarioSchema,
});

export const scenarioResultSchema = z.object({
  name: z.string(),
  start: isoDate,
  values: z.array(z.number()),
  total: z.number(),
  delta_vs_baseline: z.number(),
});

export const simulationResponseSchema = z.object({
  baseline: scenarioResultSchema,
  alternative: scenarioResultSchema,
});

export const modelRecordSchema = z.object({
  id: z.string(),
  family: z.string(),
  game: z.string(),
  target: z.string(),
  trained_at: z.string(),
  dataset_id: z.string(),
  training_window: z.tuple([isoDate, isoDate]),
});

export const modelListSchema = z.object({ models: z.array(modelRecordSchema) });

export const datasetSchema = z.object({
  id: z.string(),
  name: z.string(),
  target: z.string(),
  dates: z.array(isoDate),
  values: z.array(z.number()),
});

export const calendarEventSchema = z.object({
  date: isoDate,
  type: z.string(),
  subtype: z.string().default(""),
  scale: z.number().int().default(0),
});

export const calendarSchema = z.object({ events: z.array(calendarEventSchema) });

export const errorEnvelopeSchema = z.object({
  code: z.string(),
  message: z.string(),
  field_path: z.string().default(""),
});

export type ScenarioEvent = z.infer<typeof scenarioEventSchema>;
export type ScenarioDoc = z.infer<typeof scenarioSchema>;
export type SimulationRequest = z.infer<typeof simulationRequestSchema>;
export type ScenarioResultDoc = z.infer<typeof scenarioResultSchema>;
export type SimulationResponse = z.infer<typeof simulationResponseSchema>;
export type ModelRecord = z.infer<typeof modelRecordSchema>;
export type DatasetDoc = z.infer<typeof datasetSchema>;
export type CalendarEvent = z.infer<typeof calendarEventSchema>;
