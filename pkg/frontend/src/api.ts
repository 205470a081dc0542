/**
 * Thin client for the forecasting service. Every response is validated
 * against the schema mirror before it reaches the UI, and simulation
 * keeps at most one request in flight per alternative: a new click
 * aborts and replaces the previous one.
 */

import {
  CalendarEvent,
  DatasetDoc,
  ModelRecord,
  SimulationRequest,
  SimulationResponse,
  calendarSchema,
  datasetSchema,
  errorEnvelopeSchema,
  modelListSchema,
  simulationRequestSchema,
  simulationResponseSchema,
} from "./schema.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
    public fieldPath: string = "",
  ) {
    super(message);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

async function parseError(response: Response): Promise<ApiError> {
  try {
    const body = errorEnvelopeSchema.parse(await response.json());
    return new ApiError(response.status, body.code, body.message, body.field_path);
  } catch {
    return new ApiError(response.status, "http_error", response.statusText);
  }
}

export class ApiClient {
  private inflight = new Map<string, AbortController>();

  constructor(
    private baseUrl: string = "",
    private fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  private async getJson(path: string): Promise<unknown> {
    const response = await this.fetchImpl(this.baseUrl + path);
    if (!response.ok) throw await parseError(response);
    return response.json();
  }

  async listModels(): Promise<ModelRecord[]> {
    return modelListSchema.parse(await this.getJson("/models")).models;
  }

  async getDataset(datasetId: string): Promise<DatasetDoc> {
    return datasetSchema.parse(await this.getJson(`/datasets/${datasetId}`));
  }

  async getCalendar(from: string, to: string): Promise<CalendarEvent[]> {
    return calendarSchema.parse(await this.getJson(`/calendar?from=${from}&to=${to}`)).events;
  }

  /**
   * POST /simulate for one alternative. A still-running simulation under
   * the same key is aborted first.
   */
  async simulate(request: SimulationRequest, key: string): Promise<SimulationResponse> {
    simulationRequestSchema.parse(request); // never ship an invalid payload
    this.inflight.get(key)?.abort();
    const controller = new AbortController();
    this.inflight.set(key, controller);
    try {
      const response = await this.fetchImpl(this.baseUrl + "/simulate", {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(request),
        signal: controller.signal,
      });
      if (!response.ok) throw await parseError(response);
      return simulationResponseSchema.parse(await response.json());
    } finally {
      if (this.inflight.get(key) === controller) this.inflight.delete(key);
    }
  }
}
