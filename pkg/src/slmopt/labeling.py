"""Vertex labeling kernel.

A vertex is "mutated" by probing every offset in ``{-1, 0, +1}**n`` at the
next level's half step and keeping the best probe.  The displacement from the
vertex to that probe (or the gradient, for the fixed-point strategy) is turned
into an integer label in ``[0, n]``; a cell whose vertex labels cover every
value is completely labeled.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, NamedTuple, Optional, Sequence

from .grid import DomainError, DyadicPoint, SearchDomain, to_coords

Vector = Sequence[float]
ValueFn = Callable[[DyadicPoint], float]


class EvaluationError(ArithmeticError):
    """The objective returned a non-finite value."""

    def __init__(self, message: str, point=None):
        super().__init__(message)
        self.point = point


class ConfigurationError(ValueError):
    pass


class Sense(enum.Enum):
    MIN = "min"
    MAX = "max"

    @property
    def sign(self) -> float:
        return 1.0 if self is Sense.MIN else -1.0


class LabelingStrategy(enum.Enum):
    BEST_NEIGHBOR = "best-neighbor"
    GRADIENT_FIXED_POINT = "gradient"


@dataclass(frozen=True)
class Objective:
    evaluate: Callable[[Vector], float]
    gradient: Optional[Callable[[Vector], Vector]] = None
    sense: Sense = Sense.MIN
    name: str = "objective"

    def __call__(self, x: Vector) -> float:
        return self.evaluate(x)

    def with_sense(self, sense: Sense) -> "Objective":
        return Objective(self.evaluate, self.gradient, sense, self.name)


class Mutation(NamedTuple):
    point: DyadicPoint
    value: float
    offset: tuple[int, ...]


def checked_value(obj: Objective, x: Vector, point=None) -> float:
    v = float(obj.evaluate(x))
    if not math.isfinite(v):
        raise EvaluationError(f"{obj.name} returned {v} at {tuple(x)}", point if point is not None else tuple(x))
    return v


def direct_values(obj: Objective, d: SearchDomain) -> ValueFn:
    return lambda p: checked_value(obj, to_coords(p, d), p)


def candidate_offsets(n: int) -> list[tuple[int, ...]]:
    """Probe order: the zero offset first, then the rest lexicographically."""
    zero = (0,) * n
    return [zero] + [o for o in itertools.product((-1, 0, 1), repeat=n) if o != zero]


def _probes(p: DyadicPoint, d: SearchDomain):
    if p.dimension != d.dimension:
        raise DomainError(f"point has dimension {p.dimension}, domain has {d.dimension}")
    fine = p.at_level(p.level + 1)
    top = 1 << fine.level
    for off in candidate_offsets(p.dimension):
        ks = tuple(k + o for k, o in zip(fine.indices, off))
        if all(0 <= k <= top for k in ks):
            yield off, DyadicPoint(fine.level, ks)


def neighbor_candidates(p: DyadicPoint, d: SearchDomain) -> list[DyadicPoint]:
    """``p`` moved by 0 or +-half a step on each axis, clipped to the box.

    Returned at level ``p.level + 1`` with ``p`` itself first; at most 3**n.
    """
    return [q for _, q in _probes(p, d)]


def mutate(p: DyadicPoint, obj: Objective, d: SearchDomain,
           value_of: Optional[ValueFn] = None) -> Mutation:
    """Best probe around ``p``; exact ties keep the earlier probe."""
    value_of = value_of or direct_values(obj, d)
    sign = obj.sense.sign
    best = None
    for off, q in _probes(p, d):
        v = value_of(q)
        if not math.isfinite(v):
            raise EvaluationError(f"{obj.name} returned {v}", q)
        if best is None or sign * v < sign * best.value:
            best = Mutation(q, v, off)
    return best


def best_neighbor(p: DyadicPoint, obj: Objective, d: SearchDomain,
                  value_of: Optional[ValueFn] = None) -> DyadicPoint:
    return mutate(p, obj, d, value_of).point


def label_of_displacement(disp: Iterable[float]) -> int:
    """0 if no component is negative, else the 1-based index of the last negative one."""
    label = 0
    for i, v in enumerate(disp, start=1):
        if v < 0:
            label = i
    return label


def finite_difference_gradient(obj: Objective, x: Vector, step, domain: Optional[SearchDomain] = None) -> tuple[float, ...]:
    """Central differences; one-sided on an axis where ``x +- step`` leaves ``domain``."""
    x = [float(v) for v in x]
    n = len(x)
    steps = [float(step)] * n if isinstance(step, (int, float)) else [float(s) for s in step]
    grad = []
    for i in range(n):
        h = steps[i]
        lo_ok = hi_ok = True
        if domain is not None:
            lo_ok = x[i] - h >= domain.lower[i]
            hi_ok = x[i] + h <= domain.upper[i]
        up = list(x)
        dn = list(x)
        if lo_ok and hi_ok:
            up[i] += h
            dn[i] -= h
            g = (checked_value(obj, up) - checked_value(obj, dn)) / (2 * h)
        elif hi_ok:
            up[i] += h
            g = (checked_value(obj, up) - checked_value(obj, x)) / h
        else:
            dn[i] -= h
            g = (checked_value(obj, x) - checked_value(obj, dn)) / h
        grad.append(g)
    return tuple(grad)


def fixed_point_displacement(obj: Objective, x: Vector, d: SearchDomain,
                             allow_fd: bool = True, fd_rel_step: float = 1e-4) -> tuple[float, ...]:
    """``g(x) - x`` for ``g(x) = x + grad f(x)`` (gradient of ``-f`` when maximising)."""
    if obj.gradient is not None:
        grad = tuple(float(v) for v in obj.gradient(x))
    elif allow_fd:
        grad = finite_difference_gradient(obj, x, [fd_rel_step * s for s in d.spans], d)
    else:
        raise ConfigurationError(
            f"{obj.name} has no gradient and finite-difference fallback is disabled")
    if not all(math.isfinite(v) for v in grad):
        raise EvaluationError(f"non-finite gradient of {obj.name} at {tuple(x)}", tuple(x))
    return tuple(obj.sense.sign * v for v in grad)


def label_vertex(p: DyadicPoint, obj: Objective, d: SearchDomain,
                 strategy: LabelingStrategy = LabelingStrategy.BEST_NEIGHBOR,
                 value_of: Optional[ValueFn] = None, allow_fd: bool = True) -> int:
    if strategy is LabelingStrategy.GRADIENT_FIXED_POINT:
        return label_of_displacement(fixed_point_displacement(obj, to_coords(p, d), d, allow_fd))
    m = mutate(p, obj, d, value_of)
    # offsets are in half-steps of the same sign as the coordinate displacement
    return label_of_displacement(m.offset)


def is_complete(labels: Iterable[int], n: int) -> bool:
    return set(range(n + 1)) <= set(labels)
