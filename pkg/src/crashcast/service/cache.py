"""Two-tier prediction cache.

Primary: whole-generation precomputed entries swapped atomically, so every
reader sees exactly one generation. Secondary: an LRU with
confidence-based pinning — entries at or above the pin threshold are
exempt from eviction, capped at a fraction of capacity; past the cap they
age like everyone else.
"""

from __future__ import annotations

import threading
import time
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Optional


@dataclass
class CacheEntry:
    key: tuple
    risk_score: float
    severity_probs: list[float]
    contributing_factors: dict[str, float]
    recommended_actions: list[str]
    confidence: float
    features: dict[str, float]
    payload_prefix: bytes  # serialized response up to the cache_tier value
    inserted_at: float = 0.0
    last_access: float = 0.0


@dataclass
class _Generation:
    number: int
    entries: dict
    built_at: float


class PrimaryCache:
    """Single-writer, many-reader precomputed cache. Readers grab the current
    generation reference once per lookup; the swap is a single assignment."""

    def __init__(self) -> None:
        self._generation = _Generation(number=0, entries={}, built_at=0.0)
        self.stale = False

    @property
    def generation(self) -> int:
        return self._generation.number

    @property
    def built_at(self) -> float:
        return self._generation.built_at

    def __len__(self) -> int:
        return len(self._generation.entries)

    def lookup(self, key: tuple) -> Optional[CacheEntry]:
        return self._generation.entries.get(key)

    def swap(self, entries: dict, built_at: Optional[float] = None) -> int:
        gen = _Generation(
            number=self._generation.number + 1,
            entries=entries,
            built_at=built_at if built_at is not None else time.time(),
        )
        self._generation = gen  # atomic reference swap
        self.stale = False
        return gen.number

    def mark_stale(self) -> None:
        self.stale = True


@dataclass
class SecondaryCacheConfig:
    capacity: int = 2048
    pin_confidence: float = 0.9
    pin_fraction_max: float = 0.10

    def __post_init__(self) -> None:
        if not 0.0 < self.pin_fraction_max < 1.0:
            raise ValueError("pin_fraction_max must be in (0, 1)")
        if self.capacity < 1:
            raise ValueError("capacity must be >= 1")


class SecondaryLRU:
    """LRU with pinned high-confidence entries; mutation is serialized."""

    def __init__(self, config: SecondaryCacheConfig):
        self.config = config
        self._entries: OrderedDict = OrderedDict()
        self._pinned: set = set()
        self._lock = threading.Lock()
        self._pin_cap = int(config.pin_fraction_max * config.capacity)

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def pinned_count(self) -> int:
        return len(self._pinned)

    def get(self, key: tuple, now: Optional[float] = None) -> Optional[CacheEntry]:
        with self._lock:
            entry = self._entries.get(key)
            if entry is None:
                return None
            self._entries.move_to_end(key)
            entry.last_access = now if now is not None else time.time()
            return entry

    def insert(self, key: tuple, entry: CacheEntry, now: Optional[float] = None) -> list[CacheEntry]:
        """Insert and return whatever got evicted (at most one entry)."""
        evicted: list[CacheEntry] = []
        ts = now if now is not None else time.time()
        with self._lock:
            if key in self._entries:
                self._entries[key] = entry
                self._entries.move_to_end(key)
                entry.last_access = ts
                return evicted
            if len(self._entries) >= self.config.capacity:
                for victim_key in self._entries:
                    if victim_key not in self._pinned:
                        evicted.append(self._entries.pop(victim_key))
                        break
            entry.inserted_at = ts
            entry.last_access = ts
            self._entries[key] = entry
            if entry.confidence >= self.config.pin_confidence and len(self._pinned) < self._pin_cap:
                self._pinned.add(key)
            return evicted

    def clear(self) -> None:
        with self._lock:
            self._entries.clear()
            self._pinned.clear()
