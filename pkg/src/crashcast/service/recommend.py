"""Deterministic recommendation table: risk tier x dominant factor group."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import Optional

RISK_TIERS = ("low", "medium", "high")
TIER_THRESHOLDS = (0.3, 0.6)  # low < 0.3 <= medium < 0.6 <= high


def risk_tier(risk_score: float) -> str:
    if risk_score < TIER_THRESHOLDS[0]:
        return "low"
    if risk_score < TIER_THRESHOLDS[1]:
        return "medium"
    return "high"


def load_recommendation_table(path: Optional[str | Path] = None) -> dict:
    if path is not None:
        table = json.loads(Path(path).read_text(encoding="utf-8"))
    else:
        table = json.loads(
            resources.files("crashcast.data").joinpath("recommendations.json").read_text(encoding="utf-8")
        )
    for tier in RISK_TIERS:
        if tier not in table:
            raise ValueError(f"recommendation table lacks tier {tier!r}")
    return table


def recommend_actions(risk_score: float, dominant_group: str, table: dict) -> list[str]:
    """Fixed strings for (tier, group); equal inputs give equal outputs."""
    tier = risk_tier(risk_score)
    group_rows = table[tier]
    return list(group_rows.get(dominant_group, group_rows.get("historical", [])))
