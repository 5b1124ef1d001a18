"""Comparison baselines: uniform random search, random walk, simulated annealing."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .grid import SearchDomain
from .labeling import ConfigurationError, Objective, checked_value


@dataclass(frozen=True)
class SASchedule:
    t0: Optional[float] = None      # None: f-range over `t0_samples` uniform points
    cooling: float = 0.95
    step_scale: float = 0.1
    t0_samples: int = 100


@dataclass(frozen=True)
class BaselineResult:
    algorithm: str
    point: tuple
    value: float
    evaluations: int
    history: tuple = field(repr=False, default=())   # best-so-far after each iteration


def _check_budget(budget: int) -> None:
    if budget < 1:
        raise ConfigurationError(f"budget must be >= 1, got {budget}")


def _bounds(d: SearchDomain):
    return np.asarray(d.lower, dtype=float), np.asarray(d.upper, dtype=float)


def random_search(obj: Objective, d: SearchDomain, budget: int, seed: int = 0) -> BaselineResult:
    _check_budget(budget)
    rng = np.random.default_rng(seed)
    lo, hi = _bounds(d)
    xs = rng.uniform(lo, hi, size=(budget, d.dimension))
    sign = obj.sense.sign
    best_x, best_v = None, None
    history = []
    for x in xs:
        v = checked_value(obj, x)
        if best_v is None or sign * v < sign * best_v:
            best_x, best_v = x, v
        history.append(best_v)
    return BaselineResult("RS", tuple(float(v) for v in best_x), best_v, budget, tuple(history))


def _walk(name, obj, d, budget, rng, x0, sigma, temperature, cooling, extra_evals=0):
    lo, hi = _bounds(d)
    sign = obj.sense.sign
    x = np.asarray(x0, dtype=float)
    fx = checked_value(obj, x)
    best_x, best_v = x, fx
    history = [best_v]
    t = temperature
    for _ in range(budget - 1):
        y = np.clip(x + rng.normal(0.0, sigma), lo, hi)
        fy = checked_value(obj, y)
        delta = sign * (fy - fx)
        if delta <= 0 or (t > 0 and rng.random() < math.exp(-delta / t)):
            x, fx = y, fy
            if sign * fx < sign * best_v:
                best_x, best_v = x, fx
        history.append(best_v)
        t *= cooling
    return BaselineResult(name, tuple(float(v) for v in best_x), best_v, budget + extra_evals, tuple(history))


def rsw(obj: Objective, d: SearchDomain, budget: int, seed: int = 0,
        x_init: Optional[Sequence[float]] = None, step_scale: float = 0.1) -> BaselineResult:
    """Random walk from ``x_init`` with Gaussian steps, accepting moves that do not worsen f."""
    _check_budget(budget)
    if x_init is None:
        x_init = d.upper
    if not d.contains(x_init):
        raise ConfigurationError(f"initial point {tuple(x_init)} lies outside the domain")
    rng = np.random.default_rng(seed)
    sigma = step_scale * np.asarray(d.spans)
    return _walk("RSW", obj, d, budget, rng, x_init, sigma, 0.0, 1.0)


def simulated_annealing(obj: Objective, d: SearchDomain, budget: int, seed: int = 0,
                        schedule: SASchedule = SASchedule(),
                        x_init: Optional[Sequence[float]] = None) -> BaselineResult:
    """Metropolis acceptance with geometric cooling; returns the best point visited."""
    _check_budget(budget)
    rng = np.random.default_rng(seed)
    lo, hi = _bounds(d)
    extra = 0
    t0 = schedule.t0
    if t0 is None:
        sample = [checked_value(obj, x) for x in rng.uniform(lo, hi, size=(schedule.t0_samples, d.dimension))]
        extra = len(sample)
        t0 = max(sample) - min(sample) or 1.0
    if x_init is None:
        x_init = rng.uniform(lo, hi)
    elif not d.contains(x_init):
        raise ConfigurationError(f"initial point {tuple(x_init)} lies outside the domain")
    sigma = schedule.step_scale * np.asarray(d.spans)
    return _walk("SA", obj, d, budget, rng, x_init, sigma, t0, schedule.cooling, extra)
