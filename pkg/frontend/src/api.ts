// Thin typed client over the service's HTTP/JSON API.

import type { CrashRecord, Hotspot, PredictionResponse, PredictRequest } from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function parseOrThrow<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = await response.json();
      if (body && typeof body.error === "string") detail = body.error;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as T;
}

export class ApiClient {
  constructor(public baseUrl: string, private fetchImpl: typeof fetch = fetch) {}

  async predict(request: PredictRequest): Promise<PredictionResponse> {
    const response = await this.fetchImpl(`${this.baseUrl}/predict`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(request),
    });
    return parseOrThrow<PredictionResponse>(response);
  }

  async hotspots(
    bbox: { minLat: number; minLon: number; maxLat: number; maxLon: number },
    at?: string,
    k = 50,
  ): Promise<Hotspot[]> {
    const params = new URLSearchParams({
      min_lat: String(bbox.minLat),
      min_lon: String(bbox.minLon),
      max_lat: String(bbox.maxLat),
      max_lon: String(bbox.maxLon),
      k: String(k),
    });
    if (at) params.set("at", at);
    const response = await this.fetchImpl(`${this.baseUrl}/hotspots?${params}`);
    return parseOrThrow<Hotspot[]>(response);
  }

  async crashes(
    bbox: { minLat: number; minLon: number; maxLat: number; maxLon: number },
    range?: { from?: string; to?: string },
  ): Promise<CrashRecord[]> {
    const params = new URLSearchParams({
      min_lat: String(bbox.minLat),
      min_lon: String(bbox.minLon),
      max_lat: String(bbox.maxLat),
      max_lon: String(bbox.maxLon),
    });
    if (range?.from) params.set("from", range.from);
    if (range?.to) params.set("to", range.to);
    const response = await this.fetchImpl(`${this.baseUrl}/crashes?${params}`);
    return parseOrThrow<CrashRecord[]>(response);
  }

  async metrics(): Promise<Record<string, unknown>> {
    const response = await this.fetchImpl(`${this.baseUrl}/metrics`);
    return parseOrThrow<Record<string, unknown>>(response);
  }
}
