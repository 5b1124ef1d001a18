"""Master-worker execution of one labeling round.

The master hands each worker an immutable list of cells; each worker labels
the vertices of its cells and returns a :class:`LabelBatch`.  Selection and
subdivision stay with the master.
"""
from __future__ import annotations

import enum
import logging
import os
import threading
from concurrent.futures import Executor, ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence

from .grid import Cell, DyadicPoint, SearchDomain, cell_vertices, to_coords
from .labeling import (LabelingStrategy, Objective, checked_value, fixed_point_displacement,
                       label_of_displacement, mutate)
from .registry import ClusterTables, EvalStore

log = logging.getLogger(__name__)

WORKERS_ENV = "SLM_WORKERS"


class BackendKind(enum.Enum):
    SERIAL = "serial"
    PARALLEL = "parallel"
    CLUSTERED = "clustered"


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw:
        try:
            value = int(raw)
        except ValueError:
            raise ValueError(f"{WORKERS_ENV}={raw!r} is not an integer") from None
        if value < 1:
            raise ValueError(f"{WORKERS_ENV} must be >= 1, got {value}")
        return value
    return os.cpu_count() or 1


@dataclass(frozen=True)
class ExecutionBackend:
    kind: BackendKind = BackendKind.SERIAL
    workers: int = 1

    def __post_init__(self):
        if self.workers < 1:
            raise ValueError(f"worker count must be >= 1, got {self.workers}")

    @classmethod
    def serial(cls) -> "ExecutionBackend":
        return cls(BackendKind.SERIAL, 1)

    @classmethod
    def parallel(cls, workers: int) -> "ExecutionBackend":
        return cls(BackendKind.PARALLEL, workers)

    @classmethod
    def clustered(cls, workers: int) -> "ExecutionBackend":
        return cls(BackendKind.CLUSTERED, workers)

    @property
    def name(self) -> str:
        return self.kind.value

    @property
    def shares_store(self) -> bool:
        return self.kind is not BackendKind.PARALLEL

    @contextmanager
    def session(self) -> Iterator[Optional[Executor]]:
        if self.kind is BackendKind.SERIAL or self.workers == 1:
            yield None
            return
        with ThreadPoolExecutor(max_workers=self.workers, thread_name_prefix="slm-worker") as pool:
            yield pool


@dataclass(frozen=True)
class VertexRecord:
    point: DyadicPoint          # canonical
    coords: tuple
    value: float
    label: int
    mutant: DyadicPoint         # best probe, canonical
    mutant_coords: tuple
    mutant_value: float


@dataclass(frozen=True)
class LabelBatch:
    worker: int
    cells: tuple
    records: tuple


@dataclass
class RoundResult:
    records: Dict[DyadicPoint, VertexRecord]
    batches: List[LabelBatch]
    labelings: int
    evaluations: int = 0
    cluster_ids: Dict[Cell, int] = field(default_factory=dict)


def assign(cells: Sequence[Cell], p: int) -> Dict[int, List[int]]:
    """Round-robin over the cells in anchor order; returns worker -> cell positions."""
    if p < 1:
        raise ValueError(f"worker count must be >= 1, got {p}")
    order = sorted(range(len(cells)), key=lambda i: cells[i])
    out: Dict[int, List[int]] = {w: [] for w in range(p)}
    for slot, i in enumerate(order):
        out[slot % p].append(i)
    return out


def assess_vertex(p: DyadicPoint, obj: Objective, d: SearchDomain, strategy: LabelingStrategy,
                  value_of, allow_fd: bool = True) -> VertexRecord:
    """Evaluate, mutate and label one vertex."""
    value = value_of(p)
    m = mutate(p, obj, d, value_of)
    if strategy is LabelingStrategy.GRADIENT_FIXED_POINT:
        label = label_of_displacement(fixed_point_displacement(obj, to_coords(p, d), d, allow_fd))
    else:
        label = label_of_displacement(m.offset)
    c = p.canonical()
    mc = m.point.canonical()
    return VertexRecord(c, to_coords(c, d), value, label, mc, to_coords(mc, d), m.value)


class _Counter:
    def __init__(self):
        self._lock = threading.Lock()
        self.value = 0

    def add(self, k: int = 1):
        with self._lock:
            self.value += k


def _cell_local_values(obj: Objective, d: SearchDomain, counter: _Counter):
    cache: Dict[DyadicPoint, float] = {}

    def value_of(p: DyadicPoint) -> float:
        key = p.canonical()
        if key not in cache:
            cache[key] = checked_value(obj, to_coords(key, d), key)
            counter.add()
        return cache[key]

    return value_of


def master_round(active: Sequence[Cell], obj: Objective, d: SearchDomain, strategy: LabelingStrategy,
                 backend: ExecutionBackend, store: EvalStore, executor: Optional[Executor] = None,
                 tables: Optional[ClusterTables] = None, allow_fd: bool = True) -> RoundResult:
    """Label every vertex of ``active`` on the backend and gather the batches.

    SERIAL and CLUSTERED route every evaluation and every label through the
    shared ``store`` (each distinct point evaluated once per run, each vertex
    labeled once per round). PARALLEL labels each vertex slot of each cell
    independently, with only a per-cell value cache.
    """
    if not active:
        raise ValueError("master_round needs at least one active cell")
    cells = sorted(active)
    p = 1 if backend.kind is BackendKind.SERIAL else backend.workers
    plan = assign(cells, p)
    calls = _Counter()
    cluster_ids = {}
    if tables is not None:
        cluster_ids = {c: tables.register_cell(c) for c in cells}

    # CLUSTERED hands out distinct vertices, so a shared corner is one unit of
    # work and a single active cell still spreads over 2**n workers
    by_point = backend.kind is BackendKind.CLUSTERED
    if by_point:
        owners: Dict[DyadicPoint, List[Cell]] = {}
        for c in cells:
            for v in cell_vertices(c):
                owners.setdefault(v, []).append(c)
        points = sorted(owners, key=lambda q: q.fractions())
        plan = {w: points[w::p] for w in range(p)}

    def label_shared(v: DyadicPoint) -> VertexRecord:
        return store.label(v, lambda: assess_vertex(v, obj, d, strategy, store, allow_fd))

    def work(worker: int) -> LabelBatch:
        if by_point:
            mine = plan[worker]
            touched = sorted({c for v in mine for c in owners[v]})
            return LabelBatch(worker, tuple(touched), tuple(label_shared(v) for v in mine))
        out = []
        for c in (cells[i] for i in plan[worker]):
            if backend.shares_store:
                out.extend(label_shared(v) for v in cell_vertices(c))
            else:
                local = _cell_local_values(obj, d, calls)
                out.extend(assess_vertex(v, obj, d, strategy, local, allow_fd) for v in cell_vertices(c))
        return LabelBatch(worker, tuple(cells[i] for i in plan[worker]), tuple(out))

    workers = [w for w in range(p) if plan[w]]
    if executor is None or len(workers) == 1:
        batches = [work(w) for w in workers]
    else:
        futures = [executor.submit(work, w) for w in workers]
        errors = []
        batches = []
        for fut in futures:
            try:
                batches.append(fut.result())
            except Exception as exc:  # fail the round as a whole
                errors.append(exc)
        if errors:
            raise errors[0]

    records: Dict[DyadicPoint, VertexRecord] = {}
    slots = 0
    for b in batches:
        for r in b.records:
            slots += 1
            prev = records.setdefault(r.point, r)
            if prev != r:
                raise RuntimeError(f"workers disagree on vertex {r.point}")
    labelings = slots if not backend.shares_store else len(records)
    log.debug("round over %d cells on %s(%d): %d labelings", len(cells), backend.name, p, labelings)
    return RoundResult(records, batches, labelings, calls.value, cluster_ids)
