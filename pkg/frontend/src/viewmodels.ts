// View-model helpers. These format and arrange server values; they never
// derive new risk numbers — every displayed figure traces to a response
// field (contract-tested against recorded fixtures).

import type { CrashRecord, FactorGroup, Hotspot, PredictionResponse, RiskTier } from "./types.js";
import { FACTOR_GROUPS } from "./types.js";

// Tier thresholds mirror the service's recommendation tiers.
export const TIER_THRESHOLDS = { medium: 0.3, high: 0.6 } as const;

export const TIER_COLORS: Record<RiskTier, string> = {
  low: "#2f9e63",
  medium: "#e0a030",
  high: "#d64541",
};

export function tierForRisk(risk: number): RiskTier {
  if (risk >= TIER_THRESHOLDS.high) return "high";
  if (risk >= TIER_THRESHOLDS.medium) return "medium";
  return "low";
}

export interface FactorBar {
  group: FactorGroup;
  percent: number; // renormalized so the bars total 100
  share: number; // raw server share
}

export interface FactorPanelVM {
  bars: FactorBar[];
  dominant: FactorGroup;
  actions: string[];
}

export function factorPanel(response: PredictionResponse): FactorPanelVM {
  const total = FACTOR_GROUPS.reduce(
    (acc, g) => acc + (response.contributing_factors[g] ?? 0), 0);
  const bars = FACTOR_GROUPS.map((group) => {
    const share = response.contributing_factors[group] ?? 0;
    return { group, share, percent: total > 0 ? (share / total) * 100 : 20 };
  });
  return { bars, dominant: response.dominant_factor, actions: response.recommended_actions };
}

export interface HotspotVM {
  lat: number;
  lon: number;
  risk: number;
  tier: RiskTier;
  color: string;
  radiusM: number;
  dominant: FactorGroup;
}

export function hotspotVM(spot: Hotspot): HotspotVM {
  return {
    lat: spot.center.lat,
    lon: spot.center.lon,
    risk: spot.risk_score,
    tier: spot.risk_tier, // server's tier; tierForRisk exists for legends only
    color: TIER_COLORS[spot.risk_tier],
    radiusM: spot.display_radius_m,
    dominant: spot.dominant_factor,
  };
}

export interface WhatIfForm {
  lat: number | null;
  lon: number | null;
  at: string; // datetime-local value
  weather: string | ""; // "" = live conditions
  flags: Record<string, boolean>;
}

export function formValid(form: WhatIfForm): boolean {
  return form.lat !== null && form.lon !== null && form.at.trim().length > 0;
}

export function formToRequest(form: WhatIfForm) {
  if (!formValid(form)) throw new Error("location and time are required");
  const request: Record<string, unknown> = {
    location: { lat: form.lat, lon: form.lon },
    at: new Date(form.at).toISOString(),
  };
  if (form.weather) request.weather_override = { category: form.weather };
  const flags: Record<string, number> = {};
  for (const [name, on] of Object.entries(form.flags)) {
    if (on) flags[name] = 1;
  }
  if (Object.keys(flags).length > 0) request.flags_override = flags;
  return request;
}

// ---------------------------------------------------------- density view

export interface DensityCell {
  gx: number;
  gy: number;
  lat: number;
  lon: number;
  count: number;
  radius: number; // severity-scaled: sqrt(max severity + 1) * scale
  maxSeverity: number;
}

export interface DensityFilters {
  severities: Set<number>;
  weathers: Set<string>;
  from?: string;
  to?: string;
}

export function filterCrashes(records: CrashRecord[], filters: DensityFilters): CrashRecord[] {
  return records.filter((r) => {
    if (r.lat === null || r.lon === null) return false;
    if (filters.severities.size > 0 &&
        (r.severity === null || !filters.severities.has(r.severity))) return false;
    const weather = r.codes["WEATHER1"];
    if (filters.weathers.size > 0 && (!weather || !filters.weathers.has(weather))) return false;
    if (filters.from && (!r.occurred_at || r.occurred_at < filters.from)) return false;
    if (filters.to && (!r.occurred_at || r.occurred_at > filters.to)) return false;
    return true;
  });
}

/** Client-side aggregation of crash points to a grid sized by zoom. */
export function aggregateDensity(
  records: CrashRecord[],
  cellDeg: number,
  radiusScale = 5,
): DensityCell[] {
  const cells = new Map<string, DensityCell>();
  for (const r of records) {
    if (r.lat === null || r.lon === null) continue;
    const gx = Math.floor(r.lat / cellDeg);
    const gy = Math.floor(r.lon / cellDeg);
    const key = `${gx}:${gy}`;
    let cell = cells.get(key);
    if (!cell) {
      cell = {
        gx,
        gy,
        lat: (gx + 0.5) * cellDeg,
        lon: (gy + 0.5) * cellDeg,
        count: 0,
        radius: 0,
        maxSeverity: 0,
      };
      cells.set(key, cell);
    }
    cell.count += 1;
    cell.maxSeverity = Math.max(cell.maxSeverity, r.severity ?? 0);
  }
  for (const cell of cells.values()) {
    cell.radius = Math.sqrt(cell.maxSeverity + 1) * radiusScale;
  }
  return [...cells.values()];
}

export function formatRisk(risk: number): string {
  return risk.toFixed(4);
}

export function formatPercent(p: number): string {
  return `${(p * 100).toFixed(1)}%`;
}
