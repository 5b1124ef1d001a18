import random
import threading
import time

import pytest
from hypothesis import given, settings, strategies as st

from slmopt import get_function
from slmopt.grid import Cell, DyadicPoint, SearchDomain, cell_vertices, subdivide, to_coords
from slmopt.labeling import EvaluationError, Objective
from slmopt.registry import ClusterTables, EvalStore, OnceMap, evaluate_memo

D2 = SearchDomain.box(-2, 2, 2)


def point_at(tables, x, d=D2):
    for p in tables.point_to_cells:
        if to_coords(p, d) == x:
            return p
    raise KeyError(x)


@pytest.fixture
def quadrants():
    t = ClusterTables()
    # cluster 1 = upper right, 2 = lower right, 3 = upper left, 4 = lower left
    for anchor in [(1, 1), (1, 0), (0, 1), (0, 0)]:
        t.register_cell(Cell(1, anchor))
    return t


def test_cluster_table_layout(quadrants):
    assert quadrants.clusters_of(point_at(quadrants, (0.0, 0.0))) == {1, 2, 3, 4}
    assert quadrants.clusters_of(point_at(quadrants, (2.0, 0.0))) == {1, 2}
    assert quadrants.clusters_of(point_at(quadrants, (0.0, 2.0))) == {1, 3}
    assert quadrants.clusters_of(point_at(quadrants, (2.0, 2.0))) == {1}
    pts = {to_coords(p, D2) for p in quadrants.cell_to_points[2]}
    assert pts == {(0.0, 0.0), (2.0, 0.0), (0.0, -2.0), (2.0, -2.0)}


def test_register_is_idempotent(quadrants):
    assert quadrants.register_cell(Cell(1, (1, 1))) == 1
    assert len(quadrants.cell_to_points) == 4


def test_shared_points(quadrants):
    assert len(quadrants.shared_points(1, 2)) == 2      # edge neighbours
    assert len(quadrants.shared_points(1, 4)) == 1      # diagonal
    assert {to_coords(p, D2) for p in quadrants.shared_points(1, 4)} == {(0.0, 0.0)}
    assert len(quadrants.shared_points(3, 3)) == 4
    with pytest.raises(LookupError):
        quadrants.shared_points(1, 99)


def test_cross_level_points_merge():
    t = ClusterTables()
    t.register_cell(Cell(1, (0, 0)))
    t.register_cell(Cell(2, (1, 1)))   # shares (0,0) encoded as level-2 (2,2)
    assert t.clusters_of(DyadicPoint(2, (2, 2))) == {1, 2}


def test_csv_dump(quadrants):
    text = quadrants.to_csv(D2)
    assert text.startswith("Point,Cluster ID\n")
    assert '"(0.0,0.0)","1,2,3,4"' in text
    assert "Cluster ID,Point" in text


@settings(max_examples=5, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_tables_consistent_under_random_registration(seed):
    rng = random.Random(seed)
    t = ClusterTables()
    for _ in range(2000):
        n = rng.randint(1, 3)
        level = rng.randint(0, 4)
        t.register_cell(Cell(level, tuple(rng.randrange(1 << level) for _ in range(n))))
    assert t.is_consistent()


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_sibling_sharing(n):
    t = ClusterTables()
    kids = subdivide(Cell(0, (0,) * n))
    ids = t.register_all(kids)
    for cid in ids:
        mine = t.cell_to_points[cid]
        shared = {p for p in mine if len(t.point_to_cells[p]) > 1}
        assert len(shared) == 2 ** n - 1


class Counting:
    def __init__(self, fn, delay=0.0):
        self.fn, self.delay, self.calls = fn, delay, 0
        self.lock = threading.Lock()

    def __call__(self, x):
        with self.lock:
            self.calls += 1
        if self.delay:
            time.sleep(self.delay)
        return self.fn(x)


def test_memo_hits():
    f = Counting(get_function("f1").objective.evaluate)
    store = EvalStore(Objective(f), D2)
    p = DyadicPoint(1, (1, 1))
    assert evaluate_memo(store, p) == pytest.approx(0.16)
    assert evaluate_memo(store, p) == pytest.approx(0.16)
    assert store.count == 1 and f.calls == 1
    assert evaluate_memo(store, DyadicPoint(2, (2, 2))) == pytest.approx(0.16)
    assert store.count == 1 and f.calls == 1


def test_memo_four_siblings_nine_points():
    store = EvalStore(get_function("f1").objective, D2)
    slots = [v for c in subdivide(Cell(0, (0, 0))) for v in cell_vertices(c)]
    assert len(slots) == 16
    for v in slots:
        store.evaluate(v)
    assert store.count == 9


def test_memo_error_stores_nothing():
    store = EvalStore(Objective(lambda x: float("inf")), D2)
    with pytest.raises(EvaluationError):
        store.evaluate(DyadicPoint(0, (0, 0)))
    assert store.count == 0


def test_memo_concurrent_exactly_once():
    f = Counting(get_function("f1").objective.evaluate, delay=0.01)
    store = EvalStore(Objective(f), D2)
    pts = [DyadicPoint(2, (i % 5, (i // 5) % 5)) for i in range(200)]
    barrier = threading.Barrier(8)

    def hammer(offset):
        barrier.wait()
        for p in pts[offset:] + pts[:offset]:
            store.evaluate(p)

    threads = [threading.Thread(target=hammer, args=(i * 7,)) for i in range(8)]
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    assert f.calls == 25 == store.count


def test_oncemap_waiters_retry_after_failure():
    m = OnceMap()
    attempts = []

    def flaky():
        attempts.append(1)
        if len(attempts) == 1:
            time.sleep(0.02)
            raise RuntimeError("boom")
        return 42

    out = []

    def call():
        try:
            out.append(m.get_or_compute("k", flaky))
        except RuntimeError:
            out.append("err")

    a = threading.Thread(target=call)
    a.start()
    time.sleep(0.005)
    b = threading.Thread(target=call)
    b.start()
    a.join()
    b.join()
    assert sorted(map(str, out)) == ["42", "err"]
    assert m.get("k") == 42
