"""Exact dyadic grid: search boxes, grid points, hypercube cells.

Every coordinate is stored as ``(level, integer indices)`` so a vertex shared
by neighbouring cells, possibly encoded at different refinement levels, is
identified bit-exactly once canonicalised.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

MAX_LEVEL = 52


class DomainError(ValueError):
    """A point or box violates the search domain."""


class RefinementLimitError(RuntimeError):
    """Subdivision would exceed the configured maximum level."""


@dataclass(frozen=True)
class SearchDomain:
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        lower = tuple(float(v) for v in self.lower)
        upper = tuple(float(v) for v in self.upper)
        if len(lower) != len(upper) or not lower:
            raise DomainError("lower and upper bounds must be non-empty and of equal length")
        for a, b in zip(lower, upper):
            if not a < b:
                raise DomainError(f"empty axis: lower {a} must be below upper {b}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def box(cls, lo: float, hi: float, n: int) -> "SearchDomain":
        return cls((lo,) * n, (hi,) * n)

    @property
    def dimension(self) -> int:
        return len(self.lower)

    @property
    def spans(self) -> tuple[float, ...]:
        return tuple(b - a for a, b in zip(self.lower, self.upper))

    def contains(self, x: Sequence[float]) -> bool:
        return len(x) == self.dimension and all(
            a <= v <= b for v, a, b in zip(x, self.lower, self.upper))


@dataclass(frozen=True, order=True)
class DyadicPoint:
    """Grid point ``x_i = a_i + k_i * (b_i - a_i) / 2**level``."""

    level: int
    indices: tuple[int, ...]

    def __post_init__(self):
        if self.level < 0:
            raise DomainError(f"negative level {self.level}")
        object.__setattr__(self, "indices", tuple(int(k) for k in self.indices))

    @property
    def dimension(self) -> int:
        return len(self.indices)

    def canonical(self) -> "DyadicPoint":
        level, ks = self.level, self.indices
        while level > 0 and all(k % 2 == 0 for k in ks):
            level -= 1
            ks = tuple(k // 2 for k in ks)
        return DyadicPoint(level, ks)

    def at_level(self, level: int) -> "DyadicPoint":
        """Re-encode at a finer (or equal) level."""
        c = self.canonical()
        if level < c.level:
            raise DomainError(f"{self} is not representable at level {level}")
        shift = level - c.level
        return DyadicPoint(level, tuple(k << shift for k in c.indices))

    def fractions(self) -> tuple[Fraction, ...]:
        """Position in the unit cube as exact fractions."""
        return tuple(Fraction(k, 1 << self.level) for k in self.indices)

    def is_valid(self) -> bool:
        top = 1 << self.level
        return all(0 <= k <= top for k in self.indices)


@dataclass(frozen=True, order=True)
class Cell:
    """Level-``level`` hypercube whose lowest vertex has indices ``anchor``."""

    level: int
    anchor: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "anchor", tuple(int(k) for k in self.anchor))
        top = 1 << self.level
        if self.level < 0 or any(k < 0 or k + 1 > top for k in self.anchor):
            raise DomainError(f"cell anchor {self.anchor} out of range at level {self.level}")

    @property
    def dimension(self) -> int:
        return len(self.anchor)

    def contains_point(self, p: DyadicPoint) -> bool:
        """True when ``p`` lies in the closed cell."""
        frac = p.fractions()
        step = Fraction(1, 1 << self.level)
        return all(k * step <= f <= (k + 1) * step for k, f in zip(self.anchor, frac))


def _check_point(p: DyadicPoint, d: SearchDomain) -> None:
    if p.dimension != d.dimension:
        raise DomainError(f"point has dimension {p.dimension}, domain has {d.dimension}")
    if not p.is_valid():
        raise DomainError(f"indices {p.indices} out of range [0, 2**{p.level}]")


def to_coords(p: DyadicPoint, d: SearchDomain) -> tuple[float, ...]:
    """Map a grid point to problem coordinates, correctly rounded."""
    _check_point(p, d)
    out = []
    for a, b, t in zip(d.lower, d.upper, p.fractions()):
        if t == 1:
            out.append(b)
        else:
            fa = Fraction(a)
            out.append(float(fa + (Fraction(b) - fa) * t))
    return tuple(out)


def step_size(d: SearchDomain, level: int) -> tuple[float, ...]:
    """Per-axis grid step ``(b_i - a_i) / 2**level``."""
    return tuple(float(Fraction(b) - Fraction(a)) / (1 << level) for a, b in zip(d.lower, d.upper))


def initial_cell(d: SearchDomain) -> Cell:
    return Cell(0, (0,) * d.dimension)


def binary_offsets(n: int) -> Iterator[tuple[int, ...]]:
    return itertools.product((0, 1), repeat=n)


def cell_vertices(c: Cell) -> list[DyadicPoint]:
    """The 2**n vertices in lexicographic order of their offsets."""
    return [DyadicPoint(c.level, tuple(k + o for k, o in zip(c.anchor, off)))
            for off in binary_offsets(c.dimension)]


def subdivide(c: Cell, max_level: int = MAX_LEVEL) -> list[Cell]:
    """Halve every side: 2**n children at ``level + 1``."""
    if c.level + 1 > max_level:
        raise RefinementLimitError(
            f"subdividing a level-{c.level} cell exceeds max level {max_level}")
    base = tuple(2 * k for k in c.anchor)
    return [Cell(c.level + 1, tuple(k + o for k, o in zip(base, off)))
            for off in binary_offsets(c.dimension)]


def parent(c: Cell) -> Cell:
    if c.level == 0:
        raise DomainError("the root cell has no parent")
    return Cell(c.level - 1, tuple(k // 2 for k in c.anchor))
