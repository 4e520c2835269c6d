// Response shapes of the prediction service. Every number the UI shows has
// to come from one of these fields.

export type FactorGroup = "weather" | "temporal" | "historical" | "behavioral" | "geometry";

export const FACTOR_GROUPS: FactorGroup[] = [
  "weather",
  "temporal",
  "historical",
  "behavioral",
  "geometry",
];

export type RiskTier = "low" | "medium" | "high";

export interface PredictionResponse {
  risk_score: number;
  severity_probs: number[];
  confidence: number;
  contributing_factors: Record<FactorGroup, number>;
  dominant_factor: FactorGroup;
  risk_tier: RiskTier;
  recommended_actions: string[];
  expected_impact: number;
  features: Record<string, number>;
  cell: { resolution: number; x: number; y: number };
  cache_tier: "PRIMARY" | "SECONDARY" | "MISS";
  latency_ms: number;
}

export interface Hotspot {
  cell: { resolution: number; x: number; y: number };
  center: { lat: number; lon: number };
  risk_score: number;
  risk_tier: RiskTier;
  severity_probs: number[];
  dominant_factor: FactorGroup;
  expected_impact: number;
  display_radius_m: number;
}

export interface CrashRecord {
  id: string;
  lat: number | null;
  lon: number | null;
  occurred_at: string | null;
  hour_of_day: number | null;
  crash_month: number | null;
  severity: number | null;
  county: string;
  flags: Record<string, number | null>;
  codes: Record<string, string | null>;
}

export interface WeatherOverride {
  category: string;
  temperature_c?: number;
  visibility_km?: number;
}

export interface PredictRequest {
  location: { lat: number; lon: number };
  at: string;
  weather_override?: WeatherOverride;
  flags_override?: Record<string, number>;
}

export const WEATHER_NAMES: Record<string, string> = {
  "1": "Clear",
  "2": "Cloudy",
  "3": "Rain",
  "4": "Snow",
  "5": "Sleet/Hail",
  "6": "Fog",
};

export const SEVERITY_NAMES = ["Minor", "Moderate", "Serious", "Fatal"];
