import { describe, expect, it } from "vitest";

import type { CrashRecord, Hotspot, PredictionResponse } from "../src/types.js";
import {
  aggregateDensity,
  factorPanel,
  filterCrashes,
  formToRequest,
  formValid,
  hotspotVM,
  TIER_COLORS,
  tierForRisk,
} from "../src/viewmodels.js";

import clearFixture from "../fixtures/predict_clear.json";
import hotspotFixture from "../fixtures/hotspots.json";

describe("risk tiers", () => {
  it("matches the service thresholds 0.3 / 0.6", () => {
    expect(tierForRisk(0.0)).toBe("low");
    expect(tierForRisk(0.2999)).toBe("low");
    expect(tierForRisk(0.3)).toBe("medium");
    expect(tierForRisk(0.5999)).toBe("medium");
    expect(tierForRisk(0.6)).toBe("high");
    expect(tierForRisk(1.0)).toBe("high");
  });

  it("has a color per tier", () => {
    expect(Object.keys(TIER_COLORS).sort()).toEqual(["high", "low", "medium"]);
  });
});

describe("factor panel", () => {
  it("renormalizes bars to 100% and keeps the service ordering", () => {
    const vm = factorPanel(clearFixture as unknown as PredictionResponse);
    const total = vm.bars.reduce((acc, bar) => acc + bar.percent, 0);
    expect(Math.abs(total - 100)).toBeLessThan(1e-6);
    expect(vm.bars.map((b) => b.group)).toEqual(
      ["weather", "temporal", "historical", "behavioral", "geometry"]);
    // shares are the raw response numbers, untouched
    for (const bar of vm.bars) {
      expect(bar.share).toBe(
        (clearFixture.contributing_factors as Record<string, number>)[bar.group]);
    }
  });

  it("splits evenly when all shares are zero", () => {
    const response = {
      ...(clearFixture as unknown as PredictionResponse),
      contributing_factors: {
        weather: 0, temporal: 0, historical: 0, behavioral: 0, geometry: 0,
      },
    };
    const vm = factorPanel(response as PredictionResponse);
    for (const bar of vm.bars) expect(bar.percent).toBe(20);
  });
});

describe("hotspot view-model", () => {
  it("uses the server's tier and radius verbatim", () => {
    const spots = hotspotFixture as unknown as Hotspot[];
    for (const spot of spots) {
      const vm = hotspotVM(spot);
      expect(vm.tier).toBe(spot.risk_tier);
      expect(vm.risk).toBe(spot.risk_score);
      expect(vm.radiusM).toBe(spot.display_radius_m);
      expect(vm.color).toBe(TIER_COLORS[spot.risk_tier]);
    }
  });
});

describe("what-if form", () => {
  it("is invalid until location and time are chosen", () => {
    expect(formValid({ lat: null, lon: null, at: "", weather: "", flags: {} })).toBe(false);
    expect(formValid({ lat: 40, lon: -75, at: "", weather: "", flags: {} })).toBe(false);
    expect(formValid({ lat: null, lon: -75, at: "2023-06-15T12:00", weather: "", flags: {} })).toBe(false);
    expect(formValid({ lat: 40, lon: -75, at: "2023-06-15T12:00", weather: "", flags: {} })).toBe(true);
  });

  it("builds overrides only when set", () => {
    const base = { lat: 40, lon: -75, at: "2023-06-15T12:00", weather: "", flags: {} };
    const plain = formToRequest(base) as Record<string, unknown>;
    expect(plain.weather_override).toBeUndefined();
    expect(plain.flags_override).toBeUndefined();

    const withOverrides = formToRequest({
      ...base, weather: "4", flags: { ICY_ROAD: true, WET_ROAD: false },
    }) as Record<string, unknown>;
    expect(withOverrides.weather_override).toEqual({ category: "4" });
    expect(withOverrides.flags_override).toEqual({ ICY_ROAD: 1 });
  });
});

describe("density aggregation", () => {
  const record = (lat: number, lon: number, severity: number, weather = "1"): CrashRecord => ({
    id: `${lat}:${lon}`,
    lat,
    lon,
    occurred_at: "2023-06-01T10:00:00+00:00",
    hour_of_day: 10,
    crash_month: 6,
    severity,
    county: "C",
    flags: {},
    codes: { WEATHER1: weather },
  });

  it("buckets points and counts them", () => {
    const records = [
      record(40.01, -75.01, 0),
      record(40.02, -75.02, 1),
      record(40.45, -75.45, 3),
    ];
    const cells = aggregateDensity(records, 0.1);
    expect(cells.reduce((acc, c) => acc + c.count, 0)).toBe(3);
    const big = cells.find((c) => c.count === 2);
    expect(big).toBeDefined();
    expect(big!.maxSeverity).toBe(1);
  });

  it("scales radius by sqrt(severity + 1)", () => {
    const cells0 = aggregateDensity([record(40, -75, 0)], 0.1, 5);
    const cells3 = aggregateDensity([record(40, -75, 3)], 0.1, 5);
    expect(cells0[0]!.radius).toBeCloseTo(Math.sqrt(1) * 5, 10);
    expect(cells3[0]!.radius).toBeCloseTo(Math.sqrt(4) * 5, 10);
    expect(cells3[0]!.radius).toBeGreaterThan(cells0[0]!.radius);
  });

  it("filters by severity, weather, and time", () => {
    const records = [
      record(40, -75, 0, "1"),
      record(40.1, -75.1, 3, "4"),
    ];
    const onlyFatal = filterCrashes(records, {
      severities: new Set([3]), weathers: new Set(),
    });
    expect(onlyFatal).toHaveLength(1);
    expect(onlyFatal[0]!.severity).toBe(3);
    const onlySnow = filterCrashes(records, {
      severities: new Set(), weathers: new Set(["4"]),
    });
    expect(onlySnow).toHaveLength(1);
    const none = filterCrashes(records, {
      severities: new Set(), weathers: new Set(), from: "2024-01-01T00:00:00+00:00",
    });
    expect(none).toHaveLength(0);
  });
});
