"""Cluster bookkeeping and memoised evaluation keyed on exact grid points."""
from __future__ import annotations

import csv
import io
import threading
from typing import Callable, Dict, Generic, Hashable, Iterable, Optional, TypeVar

from .grid import Cell, DyadicPoint, SearchDomain, cell_vertices, to_coords
from .labeling import Objective, checked_value

K = TypeVar("K", bound=Hashable)
V = TypeVar("V")


class OnceMap(Generic[K, V]):
    """Thread-safe memo computing each key exactly once.

    Concurrent misses on one key run the computation once; the other callers
    block until it finishes. A failed computation stores nothing and the
    exception reaches the caller that ran it; waiters then retry.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._values: Dict[K, V] = {}
        self._pending: Dict[K, threading.Event] = {}

    def get_or_compute(self, key: K, compute: Callable[[], V]) -> V:
        while True:
            with self._lock:
                if key in self._values:
                    return self._values[key]
                event = self._pending.get(key)
                if event is None:
                    event = self._pending[key] = threading.Event()
                    owner = True
                else:
                    owner = False
            if not owner:
                event.wait()
                continue
            try:
                value = compute()
            except BaseException:
                with self._lock:
                    del self._pending[key]
                event.set()
                raise
            with self._lock:
                self._values[key] = value
                del self._pending[key]
            event.set()
            return value

    def get(self, key: K, default=None):
        with self._lock:
            return self._values.get(key, default)

    def __contains__(self, key) -> bool:
        with self._lock:
            return key in self._values

    def __len__(self) -> int:
        with self._lock:
            return len(self._values)

    def items(self):
        with self._lock:
            return list(self._values.items())

    def clear(self) -> None:
        with self._lock:
            self._values.clear()


class EvalStore:
    """Objective values per canonical point, plus per-generation labels.

    Values live for the whole run; labels depend on the probe step and are
    dropped by :meth:`new_generation`.
    """

    def __init__(self, obj: Objective, domain: SearchDomain):
        self.obj = obj
        self.domain = domain
        self._values: OnceMap[DyadicPoint, float] = OnceMap()
        self._labels: OnceMap[DyadicPoint, object] = OnceMap()

    @property
    def count(self) -> int:
        """Number of unique objective evaluations so far."""
        return len(self._values)

    def evaluate(self, p: DyadicPoint) -> float:
        key = p.canonical()
        return self._values.get_or_compute(
            key, lambda: checked_value(self.obj, to_coords(key, self.domain), key))

    __call__ = evaluate

    def cached(self, p: DyadicPoint) -> Optional[float]:
        return self._values.get(p.canonical())

    def label(self, p: DyadicPoint, compute: Callable[[], object]):
        return self._labels.get_or_compute(p.canonical(), compute)

    @property
    def label_count(self) -> int:
        return len(self._labels)

    def new_generation(self) -> None:
        self._labels.clear()

    def values(self) -> dict:
        return dict(self._values.items())


def evaluate_memo(store: EvalStore, p: DyadicPoint) -> float:
    return store.evaluate(p)


class ClusterTables:
    """Bidirectional point <-> cluster maps; cluster ids start at 1."""

    def __init__(self):
        self._lock = threading.Lock()
        self._ids: Dict[Cell, int] = {}
        self.cells: Dict[int, Cell] = {}
        self.point_to_cells: Dict[DyadicPoint, set] = {}
        self.cell_to_points: Dict[int, set] = {}

    def register_cell(self, c: Cell) -> int:
        with self._lock:
            cid = self._ids.get(c)
            if cid is not None:
                return cid
            cid = len(self._ids) + 1
            self._ids[c] = cid
            self.cells[cid] = c
            pts = {v.canonical() for v in cell_vertices(c)}
            self.cell_to_points[cid] = pts
            for p in pts:
                self.point_to_cells.setdefault(p, set()).add(cid)
            return cid

    def register_all(self, cells: Iterable[Cell]) -> list:
        return [self.register_cell(c) for c in cells]

    def cell_id(self, c: Cell) -> int:
        return self._ids[c]

    def clusters_of(self, p: DyadicPoint) -> set:
        return set(self.point_to_cells.get(p.canonical(), ()))

    def shared_points(self, c1: int, c2: int) -> set:
        try:
            return self.cell_to_points[c1] & self.cell_to_points[c2]
        except KeyError as exc:
            raise LookupError(f"unknown cluster id {exc.args[0]}") from None

    def is_consistent(self) -> bool:
        for cid, pts in self.cell_to_points.items():
            if any(cid not in self.point_to_cells.get(p, ()) for p in pts):
                return False
        for p, cids in self.point_to_cells.items():
            if any(p not in self.cell_to_points.get(c, ()) for c in cids):
                return False
        return True

    def to_csv(self, domain: Optional[SearchDomain] = None) -> str:
        """Both tables, one after the other, in the point / cluster id layout."""

        def fmt(p):
            if domain is None:
                return f"{p.level}:{' '.join(map(str, p.indices))}"
            return "(" + ",".join(repr(v) for v in to_coords(p, domain)) + ")"

        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["Point", "Cluster ID"])
        for p in sorted(self.point_to_cells, key=DyadicPoint.fractions):
            w.writerow([fmt(p), ",".join(map(str, sorted(self.point_to_cells[p])))])
        w.writerow([])
        w.writerow(["Cluster ID", "Point"])
        for cid in sorted(self.cell_to_points):
            w.writerow([cid, " ".join(fmt(p) for p in sorted(self.cell_to_points[cid], key=DyadicPoint.fractions))])
        return buf.getvalue()
