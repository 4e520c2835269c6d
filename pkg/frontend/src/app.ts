// Dashboard wiring: Historical density view and the what-if prediction
// console, both over the documented HTTP API. The UI computes no risk
// numbers of its own; it arranges what the service returns.

import { ApiClient, ApiError } from "./api.js";
import { CanvasMap, metersToPixels } from "./map.js";
import { renderPrediction, weatherOptionLabel } from "./render.js";
import type { CrashRecord, PredictionResponse } from "./types.js";
import { WEATHER_NAMES } from "./types.js";
import {
  aggregateDensity,
  filterCrashes,
  formToRequest,
  formValid,
  hotspotVM,
  TIER_COLORS,
  WhatIfForm,
} from "./viewmodels.js";

const FLAG_TOGGLES = [
  "ICY_ROAD", "WET_ROAD", "SNOW_SLUSH_ROAD", "ALCOHOL_RELATED",
  "DRUGGED_DRIVER", "AGGRESSIVE_DRIVING", "UNBELTED", "FATIGUE_ASLEEP",
];

const DEFAULT_VIEWPORT = { minLat: 39.5, maxLat: 42.5, minLon: -80.6, maxLon: -74.6 };

function $(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
}

function banner(message: string | null): void {
  const node = $("error-banner");
  if (message) {
    node.textContent = message;
    node.classList.remove("hidden");
  } else {
    node.classList.add("hidden");
  }
}

class HistoricalView {
  private cache: CrashRecord[] | null = null; // re-bucket on zoom without re-fetch
  private map: CanvasMap;

  constructor(private client: ApiClient) {
    this.map = new CanvasMap($("history-map") as HTMLCanvasElement, { ...DEFAULT_VIEWPORT });
  }

  private filters() {
    const severities = new Set<number>();
    document.querySelectorAll<HTMLInputElement>(".sev-filter:checked").forEach((box) => {
      severities.add(Number(box.value));
    });
    const weathers = new Set<string>();
    document.querySelectorAll<HTMLInputElement>(".weather-filter:checked").forEach((box) => {
      weathers.add(box.value);
    });
    return { severities, weathers };
  }

  async refresh(forceFetch: boolean): Promise<void> {
    try {
      if (forceFetch || this.cache === null) {
        const v = this.map.viewport;
        this.cache = await this.client.crashes(
          { minLat: v.minLat, minLon: v.minLon, maxLat: v.maxLat, maxLon: v.maxLon });
      }
      this.rebucket();
      banner(null);
    } catch (err) {
      banner(`historical fetch failed: ${err instanceof Error ? err.message : err}`);
    }
  }

  rebucket(): void {
    if (this.cache === null) return;
    const zoom = Number(($("zoom") as HTMLInputElement).value);
    const cellDeg = 0.4 / zoom;
    const filtered = filterCrashes(this.cache, { ...this.filters() });
    const cells = aggregateDensity(filtered, cellDeg);
    this.map.setMarkers(cells.map((cell) => ({
      lat: cell.lat,
      lon: cell.lon,
      radiusPx: Math.min(22, cell.radius + Math.log2(cell.count + 1)),
      color: ["#4f8edc", "#e0a030", "#e07030", "#d64541"][cell.maxSeverity] ?? "#4f8edc",
      alpha: 0.55,
    })));
    $("history-count").textContent =
      `${filtered.length} of ${this.cache.length} records shown · ${cells.length} cells`;
  }
}

class PredictView {
  private map: CanvasMap;
  private form: WhatIfForm = { lat: null, lon: null, at: "", weather: "", flags: {} };
  private previous: PredictionResponse | null = null;

  constructor(private client: ApiClient) {
    this.map = new CanvasMap($("predict-map") as HTMLCanvasElement, { ...DEFAULT_VIEWPORT });
    this.map.onClick((lat, lon) => {
      this.form.lat = Number(lat.toFixed(5));
      this.form.lon = Number(lon.toFixed(5));
      this.map.setPin(lat, lon);
      $("picked-location").textContent = `${this.form.lat}, ${this.form.lon}`;
      this.syncSubmit();
    });
  }

  bind(): void {
    const at = $("at-input") as HTMLInputElement;
    at.value = new Date().toISOString().slice(0, 16);
    this.form.at = at.value;
    at.addEventListener("input", () => {
      this.form.at = at.value;
      this.syncSubmit();
    });

    const weather = $("weather-select") as HTMLSelectElement;
    weather.appendChild(new Option("live conditions", ""));
    for (const code of Object.keys(WEATHER_NAMES)) {
      weather.appendChild(new Option(weatherOptionLabel(code), code));
    }
    weather.addEventListener("change", () => {
      this.form.weather = weather.value;
    });

    const flagBox = $("flag-toggles");
    for (const flag of FLAG_TOGGLES) {
      const label = document.createElement("label");
      const input = document.createElement("input");
      input.type = "checkbox";
      input.addEventListener("change", () => {
        this.form.flags[flag] = input.checked;
      });
      label.append(input, document.createTextNode(flag));
      flagBox.appendChild(label);
    }

    $("submit-whatif").addEventListener("click", () => void this.submit());
    this.syncSubmit();
    void this.loadHotspots();
    $("hotspot-refresh").addEventListener("click", () => void this.loadHotspots());
  }

  syncSubmit(): void {
    ($("submit-whatif") as HTMLButtonElement).disabled = !formValid(this.form);
  }

  async submit(): Promise<void> {
    try {
      const response = await this.client.predict(formToRequest(this.form) as never);
      if (this.previous) {
        renderPrediction($("result-previous"), this.previous, "Previous scenario");
        $("result-previous").classList.remove("hidden");
      }
      renderPrediction($("result-current"), response, "Current scenario");
      this.previous = response;
      banner(null);
    } catch (err) {
      if (err instanceof ApiError) {
        banner(`prediction rejected (${err.status}): ${err.message}`);
      } else {
        banner(`prediction failed: ${err instanceof Error ? err.message : err}`);
      }
    }
  }

  async loadHotspots(): Promise<void> {
    try {
      const v = this.map.viewport;
      const spots = await this.client.hotspots(
        { minLat: v.minLat, minLon: v.minLon, maxLat: v.maxLat, maxLon: v.maxLon },
        undefined, 40);
      const markers = spots.map((spot) => {
        const vm = hotspotVM(spot);
        return {
          lat: vm.lat,
          lon: vm.lon,
          radiusPx: metersToPixels(vm.radiusM, this.map, 900),
          color: vm.color,
          alpha: 0.8,
          label: vm.tier === "high" ? vm.dominant : undefined,
        };
      });
      this.map.setMarkers(markers);
      const legend = $("hotspot-legend");
      legend.innerHTML = "";
      for (const [tier, color] of Object.entries(TIER_COLORS)) {
        const chip = document.createElement("span");
        chip.className = "legend-chip";
        chip.style.backgroundColor = color;
        chip.textContent = tier;
        legend.appendChild(chip);
      }
      banner(null);
    } catch (err) {
      banner(`hotspot fetch failed: ${err instanceof Error ? err.message : err}`);
    }
  }
}

export function boot(): void {
  const stored = localStorage.getItem("crashcast-base-url");
  const base = stored ?? window.location.origin;
  const baseInput = $("base-url") as HTMLInputElement;
  baseInput.value = base;
  let client = new ApiClient(base);

  baseInput.addEventListener("change", () => {
    localStorage.setItem("crashcast-base-url", baseInput.value);
    client = new ApiClient(baseInput.value);
    historical = new HistoricalView(client);
    predict = new PredictView(client);
    predict.bind();
  });

  let historical = new HistoricalView(client);
  let predict = new PredictView(client);
  predict.bind();

  $("tab-history").addEventListener("click", () => {
    $("view-history").classList.remove("hidden");
    $("view-predict").classList.add("hidden");
    void historical.refresh(false);
  });
  $("tab-predict").addEventListener("click", () => {
    $("view-predict").classList.remove("hidden");
    $("view-history").classList.add("hidden");
  });
  $("history-fetch").addEventListener("click", () => void historical.refresh(true));
  $("zoom").addEventListener("input", () => historical.rebucket());
  document.querySelectorAll(".sev-filter, .weather-filter").forEach((box) => {
    box.addEventListener("change", () => historical.rebucket());
  });
}

if (typeof window !== "undefined" && typeof document !== "undefined" && document.getElementById("app")) {
  boot();
}
