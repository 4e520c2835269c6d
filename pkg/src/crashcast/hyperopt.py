"""Multi-objective hyperparameter search.

Seeded random search over the booster ranges, scoring each trial on
validation accuracy against measured single-vector inference latency
(scalar = accuracy - 0.1 * latency) while tracking the Pareto front over
(error, latency, model complexity). Trials are independent, so smarter
samplers can slot in behind the same interface.
"""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

LATENCY_PENALTY = 0.1
PROBE_SIZE = 1000
LATENCY_REPS = 3


class EvaluationFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class IntRange:
    low: int
    high: int  # inclusive

    def sample(self, rng: np.random.Generator) -> int:
        return int(rng.integers(self.low, self.high + 1))


@dataclass(frozen=True)
class FloatRange:
    low: float
    high: float
    log: bool = False

    def __post_init__(self) -> None:
        if not self.low < self.high:
            raise ValueError("range low must be below high")
        if self.log and self.low <= 0:
            raise ValueError("log-uniform range needs a positive lower bound")

    def sample(self, rng: np.random.Generator) -> float:
        if self.log:
            return float(np.exp(rng.uniform(np.log(self.low), np.log(self.high))))
        return float(rng.uniform(self.low, self.high))


@dataclass(frozen=True)
class SearchSpace:
    params: dict

    @classmethod
    def booster_default(cls) -> "SearchSpace":
        return cls(params={
            "max_depth": IntRange(3, 10),
            "learning_rate": FloatRange(0.01, 0.3),
            "min_child_weight": IntRange(1, 7),
            "subsample": FloatRange(0.6, 1.0),
            "colsample_bytree": FloatRange(0.6, 1.0),
            "reg_lambda": FloatRange(1e-8, 1.0, log=True),
            "reg_alpha": FloatRange(1e-8, 1.0, log=True),
        })


def sample_trial(space: SearchSpace, seed: int) -> dict:
    """One parameter point; uniform on linear ranges, log-uniform where flagged.
    Degenerate ranges (low == high) return the single value."""
    rng = np.random.default_rng(seed)
    out = {}
    for name, spec in space.params.items():
        if isinstance(spec, IntRange) and spec.low == spec.high:
            out[name] = spec.low
        elif isinstance(spec, FloatRange) and spec.low == spec.high:
            out[name] = spec.low
        else:
            out[name] = spec.sample(rng)
    return out


def scalarize(accuracy: float, latency: float) -> float:
    """accuracy - 0.1 * latency (latency in seconds per 1k single predictions)."""
    return accuracy - LATENCY_PENALTY * latency


@dataclass
class Trial:
    index: int
    params: dict
    accuracy: float = 0.0
    latency: float = 0.0
    complexity: float = 0.0
    scalar: float = 0.0
    seed: int = 0
    failed: bool = False
    error: Optional[str] = None

    @property
    def objectives(self) -> tuple[float, float, float]:
        """(error, latency, complexity), all minimized."""
        return (1.0 - self.accuracy, self.latency, self.complexity)

    def to_dict(self) -> dict:
        return {
            "trial": self.index,
            "params": self.params,
            "accuracy": self.accuracy,
            "latency": self.latency,
            "complexity": self.complexity,
            "scalar": self.scalar,
            "failed": self.failed,
            "error": self.error,
        }


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    """a dominates b: no worse everywhere, strictly better somewhere (minimize)."""
    no_worse = all(x <= y for x, y in zip(a, b))
    strictly = any(x < y for x, y in zip(a, b))
    return no_worse and strictly


def pareto_update(front: list[Trial], trial: Trial) -> list[Trial]:
    """Insert trial unless dominated; drop members it dominates."""
    for member in front:
        if dominates(member.objectives, trial.objectives):
            return front
    kept = [m for m in front if not dominates(trial.objectives, m.objectives)]
    kept.append(trial)
    return kept


def measure_latency(predict_one: Callable[[np.ndarray], object], probe: np.ndarray,
                    reps: int = LATENCY_REPS) -> float:
    """Median over reps of the wall-clock seconds for 1,000 single-vector calls."""
    rows = probe[:PROBE_SIZE]
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        for row in rows:
            predict_one(row)
        elapsed = time.perf_counter() - t0
        times.append(elapsed * (PROBE_SIZE / max(len(rows), 1)))
    return float(statistics.median(times))


@dataclass
class StudyResult:
    best: Optional[Trial]
    front: list[Trial]
    history: list[Trial]
    best_so_far: list[float] = field(default_factory=list)

    def history_json(self) -> list[dict]:
        out = []
        for t, b in zip(self.history, self.best_so_far):
            d = t.to_dict()
            d["best_so_far"] = b
            out.append(d)
        return out


def run_study(
    space: SearchSpace,
    budget: int,
    evaluate: Callable[[dict, int], tuple],
    seed: int = 0,
    probe: Optional[np.ndarray] = None,
) -> StudyResult:
    """Evaluate `budget` independent trials and keep the scalar best plus the
    Pareto front over (error, latency, complexity).

    `evaluate(params, trial_seed)` returns (accuracy, predict_one, complexity)
    or (accuracy, predict_one, complexity, latency); when latency is omitted
    it is measured on the probe batch. A raising trial is recorded as failed
    and the study continues.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    best: Optional[Trial] = None
    front: list[Trial] = []
    history: list[Trial] = []
    best_series: list[float] = []

    for i in range(budget):
        trial_seed = int(np.random.SeedSequence([seed, i]).generate_state(1)[0])
        params = sample_trial(space, trial_seed)
        trial = Trial(index=i, params=params, seed=trial_seed)
        try:
            result = evaluate(params, trial_seed)
            if len(result) == 4:
                accuracy, predict_one, complexity, latency = result
            else:
                accuracy, predict_one, complexity = result
                if probe is None:
                    raise EvaluationFailure("no probe batch to measure latency on")
                latency = measure_latency(predict_one, probe)
            trial.accuracy = float(accuracy)
            trial.latency = float(latency)
            trial.complexity = float(complexity)
            trial.scalar = scalarize(trial.accuracy, trial.latency)
        except Exception as exc:  # noqa: BLE001 - failed trials must not kill the study
            trial.failed = True
            trial.error = f"{type(exc).__name__}: {exc}"
        history.append(trial)
        if not trial.failed:
            front = pareto_update(front, trial)
            if best is None or trial.scalar > best.scalar:
                best = trial
        best_series.append(best.scalar if best is not None else float("-inf"))

    return StudyResult(best=best, front=front, history=history, best_so_far=best_series)
