import pytest

from slmopt.baselines import SASchedule, random_search, rsw, simulated_annealing
from slmopt.benchfuncs import get_function
from slmopt.labeling import ConfigurationError

F1 = get_function("f1")
OBJ, D = F1.objective, F1.domain


def test_random_search_single_sample():
    r = random_search(OBJ, D, 1, seed=3)
    assert r.evaluations == 1
    assert r.value == OBJ.evaluate(r.point)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_random_search_large_budget(seed):
    assert random_search(OBJ, D, 100_000, seed).value <= 0.01


def test_random_search_reproducible():
    assert random_search(OBJ, D, 500, 11) == random_search(OBJ, D, 500, 11)
    assert random_search(OBJ, D, 500, 11).point != random_search(OBJ, D, 500, 12).point


def test_budget_validation():
    for fn in (random_search, rsw, simulated_annealing):
        with pytest.raises(ConfigurationError):
            fn(OBJ, D, 0)


def test_rsw_budget_one_is_start():
    r = rsw(OBJ, D, 1, x_init=(1.0, 1.0))
    assert r.point == (1.0, 1.0)


def test_rsw_improves():
    r = rsw(OBJ, D, 500, seed=4, x_init=(1.0, 1.0), step_scale=0.1)
    assert r.value < 1.36
    assert all(b <= a for a, b in zip(r.history, r.history[1:]))


def test_rsw_rejects_outside_start():
    with pytest.raises(ConfigurationError):
        rsw(OBJ, D, 10, x_init=(14.0356, 14.0356))


def test_sa_zero_temperature_is_walk():
    a = simulated_annealing(OBJ, D, 300, seed=5, schedule=SASchedule(t0=0.0), x_init=(1.0, 1.0))
    b = rsw(OBJ, D, 300, seed=5, x_init=(1.0, 1.0))
    assert a.point == b.point and a.history == b.history


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_sa_converges(seed):
    r = simulated_annealing(OBJ, D, 10_000, seed)
    assert r.value <= 0.05
    assert all(b <= a for a, b in zip(r.history, r.history[1:]))


def test_sa_reproducible():
    assert simulated_annealing(OBJ, D, 400, 9) == simulated_annealing(OBJ, D, 400, 9)
