// DOM rendering for the prediction console. Pure functions over response
// objects so the contract tests can render fixtures directly.

import type { PredictionResponse } from "./types.js";
import { SEVERITY_NAMES, WEATHER_NAMES } from "./types.js";
import { factorPanel, formatPercent, formatRisk, TIER_COLORS } from "./viewmodels.js";

function el(tag: string, className?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderPrediction(container: HTMLElement, response: PredictionResponse,
                                 title: string): void {
  container.innerHTML = "";
  container.appendChild(el("h3", "result-title", title));

  const headline = el("div", "risk-headline");
  const score = el("span", "risk-score", formatRisk(response.risk_score));
  score.dataset.field = "risk_score";
  const tier = el("span", `tier-badge tier-${response.risk_tier}`, response.risk_tier.toUpperCase());
  tier.style.backgroundColor = TIER_COLORS[response.risk_tier];
  headline.append(score, tier);
  headline.appendChild(el("span", "meta",
    `confidence ${formatPercent(response.confidence)} · ${response.cache_tier} · ${response.latency_ms.toFixed(1)} ms`));
  container.appendChild(headline);

  const echo = el("div", "weather-echo");
  const echoValue = el("span", "echo-value", String(response.features["weather_risk"] ?? ""));
  echoValue.dataset.field = "features.weather_risk";
  echo.append(el("span", "echo-label", "weather_risk feature: "), echoValue);
  container.appendChild(echo);

  const severity = el("div", "severity-bars");
  response.severity_probs.forEach((p, i) => {
    const row = el("div", "bar-row");
    row.appendChild(el("span", "bar-label", SEVERITY_NAMES[i] ?? `class ${i}`));
    const track = el("div", "bar-track");
    const fill = el("div", "bar-fill severity-fill");
    fill.style.width = `${(p * 100).toFixed(2)}%`;
    fill.dataset.field = `severity_probs[${i}]`;
    fill.dataset.value = String(p);
    track.appendChild(fill);
    row.appendChild(track);
    row.appendChild(el("span", "bar-value", formatPercent(p)));
    severity.appendChild(row);
  });
  container.appendChild(severity);

  const factors = factorPanel(response);
  const panel = el("div", "factor-panel");
  panel.appendChild(el("h4", undefined, `Contributing factors (dominant: ${factors.dominant})`));
  for (const bar of factors.bars) {
    const row = el("div", "bar-row");
    row.appendChild(el("span", "bar-label", bar.group));
    const track = el("div", "bar-track");
    const fill = el("div", "bar-fill factor-fill");
    fill.style.width = `${bar.percent.toFixed(2)}%`;
    fill.dataset.group = bar.group;
    fill.dataset.percent = String(bar.percent);
    track.appendChild(fill);
    row.appendChild(track);
    row.appendChild(el("span", "bar-value", `${bar.percent.toFixed(1)}%`));
    panel.appendChild(row);
  }
  container.appendChild(panel);

  const actions = el("div", "actions");
  actions.appendChild(el("h4", undefined, "Recommended actions"));
  const list = el("ul");
  for (const action of response.recommended_actions) {
    list.appendChild(el("li", "action-item", action));
  }
  actions.appendChild(list);
  container.appendChild(actions);

  const weatherCode = Object.entries(response.features)
    .find(([k]) => k === "weather_risk");
  void weatherCode;
  const context = el("div", "context-line",
    `cell ${response.cell.resolution}/${response.cell.x}/${response.cell.y}` +
    ` · expected impact ${response.expected_impact.toFixed(3)}`);
  container.appendChild(context);
}

export function weatherOptionLabel(code: string): string {
  return `${code} — ${WEATHER_NAMES[code] ?? "Unknown"}`;
}
