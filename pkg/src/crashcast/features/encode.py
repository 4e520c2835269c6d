"""Cyclical encodings for periodic quantities (hour of day, month)."""

from __future__ import annotations

import math


def cyclical_encode(value: float, period: float) -> tuple[float, float]:
    """(sin, cos) of the value's phase within the period."""
    if period <= 0:
        raise ValueError("period must be positive")
    angle = 2.0 * math.pi * value / period
    return (math.sin(angle), math.cos(angle))
