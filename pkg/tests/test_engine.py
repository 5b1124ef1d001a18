import math

import pytest

from slmopt import get_function
from slmopt.engine import EngineConfig, EngineError, generation_step, run, select_cells
from slmopt.grid import Cell, DyadicPoint, SearchDomain, cell_vertices, initial_cell, subdivide, to_coords
from slmopt.labeling import LabelingStrategy, Objective, Sense
from slmopt.registry import EvalStore
from slmopt.runtime import BackendKind, ExecutionBackend, VertexRecord

from oracles import brute_force_label

F1 = get_function("f1")
EASOM = get_function("easom")
F2 = get_function("dejong-f2")


def mask(report):
    return report.to_dict(timing=False)


def labels_by_coords(trace):
    return {r.coords: r.label for r in trace.records}


def test_f1_generation_traces():
    rep = run(F1.objective, F1.domain, EngineConfig(max_generations=3))
    g0, g1, g2 = rep.traces
    assert labels_by_coords(g0) == {(-2.0, -2.0): 0, (-2.0, 2.0): 2, (2.0, -2.0): 1, (2.0, 2.0): 2}
    assert labels_by_coords(g1) == {(-2.0, 2.0): 2, (2.0, 2.0): 2, (-2.0, -2.0): 0, (2.0, -2.0): 1,
                                    (2.0, 0.0): 1, (0.0, 2.0): 2, (-2.0, 0.0): 0, (0.0, -2.0): 0,
                                    (0.0, 0.0): 0}
    assert g1.survivors == (Cell(1, (1, 1)),)          # [0,2]^2
    assert g2.survivors == (Cell(2, (2, 2)),)          # [0,1]^2
    assert rep.best.coords == (0.0, 0.5)
    corners = {to_coords(v, F1.domain) for c in g2.survivors for k in subdivide(c) for v in cell_vertices(k)}
    assert (0.0, 0.5) in corners


def test_f1_six_generations():
    rep = run(F1.objective, F1.domain, EngineConfig(max_generations=6))
    assert rep.best.coords == (0.0, 0.4375)


def test_rosenbrock_four_generations():
    rep = run(F2.objective, F2.domain, EngineConfig(max_generations=4))
    x, y = rep.best.coords
    assert (x, y) == pytest.approx((1.024, 1.024), abs=1e-12)


def test_easom_generation_zero_complete():
    rep = run(EASOM.objective, EASOM.domain, EngineConfig(max_generations=1))
    t = rep.traces[0]
    assert sorted(labels_by_coords(t).values()) == [0, 1, 2, 2]
    assert t.complete == (initial_cell(EASOM.domain),)


def test_one_dimensional_step():
    d = SearchDomain((-1.0,), (1.0,))
    obj = Objective(lambda x: x[0] ** 2)
    store = EvalStore(obj, d)
    trace, children = generation_step([initial_cell(d)], obj, d, EngineConfig(), ExecutionBackend.serial(), store)
    assert labels_by_coords(trace) == {(-1.0,): 0, (1.0,): 1}
    assert trace.complete == (initial_cell(d),)
    assert len(children) == 2


def rec(x, label, value=1.0):
    p = DyadicPoint(1, x)
    return VertexRecord(p, x, value, label, p, x, value)


def test_select_single_complete():
    cells = subdivide(Cell(0, (0, 0)))
    labels = {(0, 0): 0, (0, 1): 0, (0, 2): 0, (1, 0): 0, (1, 1): 0, (1, 2): 2, (2, 0): 0, (2, 1): 1, (2, 2): 2}
    records = {DyadicPoint(1, k).canonical(): rec(k, v) for k, v in labels.items()}
    surv, complete, fb, _ = select_cells(cells, records, EngineConfig())
    assert surv == [Cell(1, (1, 1))] and complete == surv and not fb


def test_select_multimodal_keeps_all():
    # cos x + cos y on [-pi, pi]^2: one minimum in each corner, so each quadrant labels completely
    d = SearchDomain.box(-math.pi, math.pi, 2)
    f = lambda x: math.cos(x[0]) + math.cos(x[1])
    obj = Objective(f)
    active = subdivide(initial_cell(d))
    half = (math.pi / 2, math.pi / 2)
    oracle = {}
    for c in active:
        labs = {brute_force_label(f, to_coords(v, d), half, d.lower, d.upper) for v in cell_vertices(c)}
        oracle[c] = labs >= {0, 1, 2}
    assert all(oracle.values())
    trace, _ = generation_step(active, obj, d, EngineConfig(multimodal=True), ExecutionBackend.serial(),
                               EvalStore(obj, d), 1)
    assert set(trace.complete) == set(active)
    assert set(trace.survivors) == set(active)


def test_select_fallback():
    cells = subdivide(Cell(0, (0, 0)))
    records = {}
    for i in range(3):
        for j in range(3):
            p = DyadicPoint(1, (i, j)).canonical()
            records[p] = rec((i, j), 0, value=float(i + j) if (i, j) != (2, 2) else -5.0)
    surv, complete, fb, _ = select_cells(cells, records, EngineConfig())
    assert fb and not complete
    assert surv == [Cell(1, (1, 1))]


def test_select_empty_raises():
    with pytest.raises(EngineError):
        select_cells([], {}, EngineConfig())


def test_truncation():
    d = SearchDomain.box(0, 1, 2)
    rep = run(Objective(lambda x: 0.0), d, EngineConfig(max_generations=4, max_cells=5))
    assert any(t.truncated for t in rep.traces)
    assert all(len(t.survivors) <= 5 for t in rep.traces)


def test_h_tolerance_stops_after_one_generation():
    rep = run(F1.objective, F1.domain, EngineConfig(h_tolerance=10.0, max_generations=20))
    assert rep.generations == 1


def test_h_tolerance_stop_rule():
    rep = run(F1.objective, F1.domain, EngineConfig(h_tolerance=0.25, max_generations=50))
    assert [t.step[0] for t in rep.traces] == [4, 2, 1, 0.5, 0.25]


def test_config_validation():
    with pytest.raises(ValueError):
        EngineConfig(h_tolerance=0)
    with pytest.raises(ValueError):
        EngineConfig(max_generations=0)


@pytest.mark.parametrize("fn", [F1, EASOM, F2])
def test_refinement_invariants(fn):
    rep = run(fn.objective, fn.domain, EngineConfig(max_generations=8))
    for g, t in enumerate(rep.traces):
        assert all(c.level == g for c in t.cells)
        if g:
            prev = rep.traces[g - 1]
            assert all(s == x / 2 for s, x in zip(t.step, prev.step))
            kids = {k for c in prev.survivors for k in subdivide(c)}
            assert set(t.cells) == kids
        if not t.fallback:
            assert set(t.survivors) <= set(t.complete)


@pytest.mark.parametrize("fn, gens", [(F1, 6), (EASOM, 11), (F2, 4)])
def test_converges_within_step(fn, gens):
    rep = run(fn.objective, fn.domain, EngineConfig(max_generations=gens))
    xm = fn.nearest_minimizer(rep.best.coords)
    h = rep.traces[-1].step
    assert all(abs(a - b) <= s for a, b, s in zip(rep.best.coords, xm, h))


def test_evaluations_are_unique():
    calls = []
    obj = Objective(lambda x: calls.append(tuple(x)) or F1.objective.evaluate(x))
    rep = run(obj, F1.domain, EngineConfig(max_generations=6))
    assert len(calls) == len(set(calls)) == rep.evaluations


@pytest.mark.parametrize("fn", [F1, EASOM, F2])
def test_backends_agree(fn):
    cfg = EngineConfig(max_generations=fn.generations)
    ref = mask(run(fn.objective, fn.domain, cfg))
    for kind in (BackendKind.PARALLEL, BackendKind.CLUSTERED):
        got = mask(run(fn.objective, fn.domain, cfg, ExecutionBackend(kind, 3)))
        for key in ("evaluations", "labelings", "backend"):
            got.pop(key), ref.pop(key, None)
        for g1, g2 in zip(got["generations"], ref["generations"]):
            g1.pop("labelings"), g2.pop("labelings", None)
        assert got == ref


def test_gradient_strategy_runs():
    cfg = EngineConfig(strategy=LabelingStrategy.GRADIENT_FIXED_POINT, max_generations=8)
    rep = run(F1.objective, F1.domain, cfg)
    assert rep.traces[0].complete
    x, y = rep.best.coords
    assert abs(x) <= 0.1 and abs(y - 0.4) <= 0.1


def test_maximisation():
    neg = Objective(lambda x: -F1.objective.evaluate(x), name="neg")
    rep = run(neg, F1.domain, EngineConfig(max_generations=6, sense=Sense.MAX))
    assert rep.best.coords == (0.0, 0.4375)


def test_report_json_shape():
    d = run(F1.objective, F1.domain, EngineConfig(max_generations=2)).to_dict()
    assert d["schema_version"] == 1
    assert len(d["generations"]) == 2
    assert d["generations"][0]["vertices"][0].keys() >= {"point", "label", "mutated"}
    assert "wall_time" in d
