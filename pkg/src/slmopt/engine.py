"""Subdivision labeling loop.

Each generation labels the vertices of the active cells, keeps the completely
labeled ones and halves them.  In genetic-algorithm terms the active vertices
are the population, the best probe around each vertex is its mutated
offspring, and complete labeling is the selection rule.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .grid import (MAX_LEVEL, Cell, DyadicPoint, SearchDomain, cell_vertices, initial_cell,
                   step_size, subdivide, to_coords)
from .labeling import LabelingStrategy, Objective, Sense, is_complete
from .registry import ClusterTables, EvalStore
from .runtime import BackendKind, ExecutionBackend, RoundResult, VertexRecord, master_round

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1


class EngineError(RuntimeError):
    pass


@dataclass(frozen=True)
class EngineConfig:
    strategy: LabelingStrategy = LabelingStrategy.BEST_NEIGHBOR
    h_tolerance: float = 1e-9
    max_generations: int = 20
    multimodal: bool = False
    sense: Sense = Sense.MIN
    max_level: int = MAX_LEVEL
    max_cells: int = 4096
    allow_fd: bool = True

    def __post_init__(self):
        if not self.h_tolerance > 0:
            raise ValueError(f"h_tolerance must be positive, got {self.h_tolerance}")
        if self.max_generations < 1:
            raise ValueError(f"max_generations must be >= 1, got {self.max_generations}")
        if self.max_cells < 1:
            raise ValueError("max_cells must be >= 1")


@dataclass(frozen=True)
class FinalPoint:
    cell: Cell
    vertex: VertexRecord

    @property
    def point(self) -> DyadicPoint:
        return self.vertex.mutant

    @property
    def coords(self) -> tuple:
        return self.vertex.mutant_coords

    @property
    def value(self) -> float:
        return self.vertex.mutant_value


@dataclass(frozen=True)
class GenerationTrace:
    generation: int
    step: tuple
    cells: Tuple[Cell, ...]
    records: Tuple[VertexRecord, ...]
    complete: Tuple[Cell, ...]
    survivors: Tuple[Cell, ...]
    fallback: bool
    truncated: bool
    labelings: int
    evaluations: int
    cluster_ids: Dict[Cell, int] = field(default_factory=dict, compare=False)


@dataclass
class RunReport:
    function: str
    domain: SearchDomain
    config: EngineConfig
    backend: ExecutionBackend
    traces: List[GenerationTrace]
    final: List[FinalPoint]
    evaluations: int
    labelings: int
    wall_time: float
    clusters: Optional[ClusterTables] = field(default=None, repr=False, compare=False)

    @property
    def best(self) -> FinalPoint:
        return self.final[0]

    @property
    def generations(self) -> int:
        return len(self.traces)

    def to_dict(self, timing: bool = True) -> dict:
        def pt(p: DyadicPoint, coords):
            return {"level": p.level, "indices": list(p.indices), "x": list(coords)}

        def cell(c: Cell):
            return {"level": c.level, "anchor": list(c.anchor),
                    "lower": list(to_coords(DyadicPoint(c.level, c.anchor), self.domain))}

        out = {
            "schema_version": SCHEMA_VERSION,
            "function": self.function,
            "domain": {"lower": list(self.domain.lower), "upper": list(self.domain.upper)},
            "config": {
                "strategy": self.config.strategy.value,
                "h_tolerance": self.config.h_tolerance,
                "max_generations": self.config.max_generations,
                "multimodal": self.config.multimodal,
                "sense": self.config.sense.value,
            },
            "backend": {"name": self.backend.name, "workers": self.backend.workers},
            "generations": [
                {
                    "generation": t.generation,
                    "h": list(t.step),
                    "active_cells": len(t.cells),
                    "fallback": t.fallback,
                    "truncated": t.truncated,
                    "labelings": t.labelings,
                    "vertices": [
                        {"point": list(r.coords), "value": r.value, "label": r.label,
                         "mutated": list(r.mutant_coords), "mutated_value": r.mutant_value}
                        for r in t.records
                    ],
                    "survivors": [cell(c) for c in t.survivors],
                }
                for t in self.traces
            ],
            "final_points": [
                {"cell": cell(f.cell), "vertex": pt(f.vertex.point, f.vertex.coords),
                 "point": pt(f.point, f.coords), "value": f.value}
                for f in self.final
            ],
            "evaluations": self.evaluations,
            "labelings": self.labelings,
        }
        if timing:
            out["wall_time"] = self.wall_time
        return out


def _spatial_key(p: DyadicPoint):
    return p.fractions()


def _fitness(c: Cell, records: Dict[DyadicPoint, VertexRecord], sign: float) -> Tuple[float, VertexRecord]:
    """Best offspring value over the cell's vertices, with the vertex that produced it."""
    best = None
    for v in cell_vertices(c):
        r = records[v.canonical()]
        if best is None or sign * r.mutant_value < sign * best.mutant_value:
            best = r
    return sign * best.mutant_value, best


def select_cells(cells: Sequence[Cell], records: Dict[DyadicPoint, VertexRecord],
                 cfg: EngineConfig) -> Tuple[List[Cell], List[Cell], bool, bool]:
    """Pick the cells to refine.

    Returns ``(survivors, complete, fallback, truncated)``. Without
    ``multimodal`` only the complete cells of best fitness survive; cells tied
    on fitness all survive since values cannot separate them. With no
    complete cell, the cells of best fitness survive and ``fallback`` is set.
    """
    if not cells:
        raise EngineError("no active cells to select from")
    n = cells[0].dimension
    sign = cfg.sense.sign
    cells = sorted(cells)
    complete = [c for c in cells
                if is_complete((records[v.canonical()].label for v in cell_vertices(c)), n)]
    fallback = not complete
    pool = cells if fallback else complete
    if cfg.multimodal and not fallback:
        survivors = list(complete)
    else:
        fit = {c: _fitness(c, records, sign)[0] for c in pool}
        top = min(fit.values())
        survivors = [c for c in pool if fit[c] == top]
    truncated = len(survivors) > cfg.max_cells
    if truncated:
        log.warning("keeping %d of %d surviving cells", cfg.max_cells, len(survivors))
        survivors = survivors[:cfg.max_cells]
    return survivors, complete, fallback, truncated


def generation_step(active: Sequence[Cell], obj: Objective, d: SearchDomain, cfg: EngineConfig,
                    backend: ExecutionBackend, store: EvalStore, generation: int = 0,
                    executor=None, tables: Optional[ClusterTables] = None
                    ) -> Tuple[GenerationTrace, List[Cell]]:
    """One label / select pass; returns the trace and the survivors' children."""
    if not active:
        raise EngineError("generation started with no active cells")
    levels = {c.level for c in active}
    if len(levels) != 1:
        raise EngineError(f"active cells span several levels: {sorted(levels)}")
    level = levels.pop()
    store.new_generation()
    before = store.count
    rnd: RoundResult = master_round(active, obj, d, cfg.strategy, backend, store, executor,
                                    tables, cfg.allow_fd)
    survivors, complete, fallback, truncated = select_cells(active, rnd.records, cfg)
    evaluations = store.count - before if backend.shares_store else rnd.evaluations
    trace = GenerationTrace(
        generation=generation,
        step=step_size(d, level),
        cells=tuple(sorted(active)),
        records=tuple(sorted(rnd.records.values(), key=lambda r: _spatial_key(r.point))),
        complete=tuple(complete),
        survivors=tuple(survivors),
        fallback=fallback,
        truncated=truncated,
        labelings=rnd.labelings,
        evaluations=evaluations,
        cluster_ids=rnd.cluster_ids,
    )
    if fallback:
        log.info("generation %d: no completely labeled cell, kept %d by value", generation, len(survivors))
    children = []
    if level + 1 <= cfg.max_level:
        children = sorted(ch for c in survivors for ch in subdivide(c, cfg.max_level))
    return trace, children


def final_points(trace: GenerationTrace, cfg: EngineConfig) -> List[FinalPoint]:
    records = {r.point: r for r in trace.records}
    sign = cfg.sense.sign
    out = []
    for c in trace.survivors:
        fit, r = _fitness(c, records, sign)
        out.append((fit, c, FinalPoint(c, r)))
    out.sort(key=lambda t: (t[0], t[1]))
    return [f for _, _, f in out]


def run(obj: Objective, d: SearchDomain, cfg: EngineConfig = EngineConfig(),
        backend: ExecutionBackend = ExecutionBackend.serial()) -> RunReport:
    """Refine from the corner cell until the step reaches ``h_tolerance``,
    ``max_generations`` passes have run, or ``max_level`` is reached."""
    obj = obj.with_sense(cfg.sense)
    store = EvalStore(obj, d)
    tables = ClusterTables() if backend.kind is BackendKind.CLUSTERED else None
    active = [initial_cell(d)]
    traces: List[GenerationTrace] = []
    t0 = time.perf_counter()
    with backend.session() as executor:
        for g in range(cfg.max_generations):
            trace, children = generation_step(active, obj, d, cfg, backend, store, g, executor, tables)
            traces.append(trace)
            if max(trace.step) <= cfg.h_tolerance or not children:
                break
            active = children
    wall = time.perf_counter() - t0
    evaluations = store.count if backend.shares_store else sum(t.evaluations for t in traces)
    return RunReport(
        function=obj.name,
        domain=d,
        config=cfg,
        backend=backend,
        traces=traces,
        final=final_points(traces[-1], cfg),
        evaluations=evaluations,
        labelings=sum(t.labelings for t in traces),
        wall_time=wall,
        clusters=tables,
    )
