"""Test objectives with known optima."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Sequence

from .grid import SearchDomain
from .labeling import Objective

FOXHOLE_GRID = (-32.0, -16.0, 0.0, 16.0, 32.0)


def f1(x):
    return x[0] ** 2 + (x[1] - 0.4) ** 2


def f1_gradient(x):
    return (2.0 * x[0], 2.0 * (x[1] - 0.4))


def easom(x):
    x1, x2 = x[0], x[1]
    return -math.cos(x1) * math.cos(x2) * math.exp(-((x1 - math.pi) ** 2 + (x2 - math.pi) ** 2))


def easom_gradient(x):
    x1, x2 = x[0], x[1]
    e = math.exp(-((x1 - math.pi) ** 2 + (x2 - math.pi) ** 2))
    c1, c2 = math.cos(x1), math.cos(x2)
    return (e * c2 * (math.sin(x1) + 2.0 * (x1 - math.pi) * c1),
            e * c1 * (math.sin(x2) + 2.0 * (x2 - math.pi) * c2))


def dejong_f2(x):
    """Rosenbrock's saddle."""
    return 100.0 * (x[0] ** 2 - x[1]) ** 2 + (1.0 - x[0]) ** 2


def dejong_f2_gradient(x):
    u = x[0] ** 2 - x[1]
    return (400.0 * x[0] * u - 2.0 * (1.0 - x[0]), -200.0 * u)


def dejong_f2_unsquared(x):
    """Saddle with the first term left unsquared; unbounded below, demo only."""
    return 100.0 * (x[0] ** 2 - x[1]) + (1.0 - x[0]) ** 2


def foxhole_centres():
    return [(FOXHOLE_GRID[i % 5], FOXHOLE_GRID[i // 5]) for i in range(25)]


_FOXHOLES = foxhole_centres()


def dejong_f5(x):
    """Shekel's foxholes; hole ``i`` (0-based) has depth offset ``i + 1``."""
    total = 0.0
    for i, (a0, a1) in enumerate(_FOXHOLES):
        total += 1.0 / (i + 1 + (x[0] - a0) ** 6 + (x[1] - a1) ** 6)
    return 1.0 / (0.002 + total)


@dataclass(frozen=True)
class BenchFunction:
    name: str
    objective: Objective
    domain: SearchDomain
    minimizers: tuple
    minimum: float
    rel_tol: float = 1e-9
    abs_tol: float = 0.0
    generations: int = 10

    def validate(self) -> None:
        for xm in self.minimizers:
            v = self.objective.evaluate(xm)
            if not math.isclose(v, self.minimum, rel_tol=self.rel_tol, abs_tol=self.abs_tol):
                raise ValueError(f"{self.name}: f{xm} = {v}, expected {self.minimum}")

    def nearest_minimizer(self, x: Sequence[float]) -> tuple:
        return min(self.minimizers, key=lambda m: sum((a - b) ** 2 for a, b in zip(x, m)))


FUNCTIONS: Dict[str, BenchFunction] = {}


def _register(fn: BenchFunction) -> None:
    fn.validate()
    FUNCTIONS[fn.name] = fn


_register(BenchFunction("f1", Objective(f1, f1_gradient, name="f1"),
                        SearchDomain.box(-2.0, 2.0, 2), ((0.0, 0.4),), 0.0, abs_tol=1e-12, generations=6))
_register(BenchFunction("easom", Objective(easom, easom_gradient, name="easom"),
                        SearchDomain.box(-100.0, 100.0, 2), ((math.pi, math.pi),), -1.0, generations=11))
_register(BenchFunction("dejong-f2", Objective(dejong_f2, dejong_f2_gradient, name="dejong-f2"),
                        SearchDomain.box(-2.048, 2.048, 2), ((1.0, 1.0),), 0.0, abs_tol=1e-12, generations=4))
_register(BenchFunction("dejong-f5", Objective(dejong_f5, name="dejong-f5"),
                        SearchDomain.box(-65.536, 65.536, 2), ((-32.0, -32.0),), 0.998004,
                        rel_tol=0.0, abs_tol=1e-4, generations=8))


def get_function(name: str, literal_f2: bool = False) -> BenchFunction:
    if literal_f2 and name == "dejong-f2":
        base = FUNCTIONS[name]
        return BenchFunction("dejong-f2-unsquared",
                             Objective(dejong_f2_unsquared, name="dejong-f2-unsquared"),
                             base.domain, base.minimizers, float("nan"), generations=base.generations)
    try:
        return FUNCTIONS[name]
    except KeyError:
        raise KeyError(f"unknown function {name!r}; choose from {', '.join(sorted(FUNCTIONS))}") from None


def with_delay(obj: Objective, delay: float, sleep: Callable[[float], None] = time.sleep) -> Objective:
    """Same objective, but every evaluation first blocks for ``delay`` seconds."""
    if delay < 0:
        raise ValueError(f"delay must be >= 0, got {delay}")
    if delay == 0:
        return obj
    inner = obj.evaluate

    def evaluate(x):
        sleep(delay)
        return inner(x)

    return Objective(evaluate, obj.gradient, obj.sense, obj.name)
