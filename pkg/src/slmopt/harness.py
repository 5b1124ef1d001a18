"""Experiment tables: algorithm comparison and speedup sweeps."""
from __future__ import annotations

import csv
import io
import logging
import os
import statistics
import warnings
from dataclasses import dataclass, field
from decimal import ROUND_DOWN, Decimal
from typing import Dict, Iterable, List, Optional, Sequence

from . import baselines
from .benchfuncs import BenchFunction, with_delay
from .engine import EngineConfig, RunReport, run
from .grid import SearchDomain
from .labeling import ConfigurationError
from .runtime import BackendKind, ExecutionBackend

log = logging.getLogger(__name__)

COMPARISON_HEADER = ["Algorithm", "Iteration", "Optimal point", "Best Point", "Error"]
SPEEDUP_HEADER = ["Algorithm", "NP", "Time", "LB Time", "Speedup", "Efficiency"]

# report-metadata aliases for the backends
ALGORITHM_ALIASES = {"serial": "SLM", "parallel": "SLMPGA", "clustered": "SLMCBPGA"}

# per-function baseline budgets and walk start points
BASELINE_DEFAULTS = {
    "f1": {"RS": 1000, "RSW": 500, "SA": 150, "x_init": None},
    "easom": {"RS": 1500, "RSW": 700, "SA": 1200, "x_init": (1.048, 0.89)},
}
GENERIC_BASELINE = {"RS": 1000, "RSW": 500, "SA": 500, "x_init": None}


def truncate3(x: float) -> float:
    """Cut (not round) to three decimals, as the timing tables do."""
    return float(Decimal(repr(x)).quantize(Decimal("0.001"), rounding=ROUND_DOWN))


@dataclass(frozen=True)
class SpeedupRow:
    algorithm: str
    np: int
    time: float
    lb_time: float
    speedup: float
    efficiency: float
    evaluations: Optional[int] = None

    def cells(self) -> List[str]:
        return [self.algorithm, str(self.np), f"{self.time:.3f}", f"{self.lb_time:.3f}",
                f"{self.speedup:.3f}", f"{self.efficiency:.3f}"]


def speedup_row(algorithm: str, t1: float, tp: float, p: int, evaluations: Optional[int] = None) -> SpeedupRow:
    """Derived columns: LB = T1/p, speedup = T1/Tp, efficiency = speedup/p."""
    if p < 1:
        raise ValueError(f"NP must be >= 1, got {p}")
    if p == 1:
        return SpeedupRow(algorithm, 1, tp, tp, 1.0, 1.0, evaluations)
    s = t1 / tp
    return SpeedupRow(algorithm, p, tp, truncate3(t1 / p), truncate3(s), truncate3(s / p), evaluations)


@dataclass(frozen=True)
class ComparisonRow:
    algorithm: str
    iterations: int
    found: tuple
    known: tuple
    value: float = float("nan")

    @property
    def error(self) -> tuple:
        return tuple(abs(a - b) for a, b in zip(self.found, self.known))

    def cells(self) -> List[str]:
        return [self.algorithm, str(self.iterations), fmt_point(self.found),
                fmt_point(self.known), fmt_point(self.error)]


def fmt_point(x: Iterable[float]) -> str:
    return "(" + ", ".join(f"{v:.10g}" for v in x) + ")"


def to_csv(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


@dataclass
class BaselineBudgets:
    rs: int
    rsw: int
    sa: int
    x_init: Optional[tuple] = None
    step_scale: float = 0.1
    schedule: baselines.SASchedule = field(default_factory=baselines.SASchedule)

    @classmethod
    def for_function(cls, name: str, **overrides) -> "BaselineBudgets":
        base = BASELINE_DEFAULTS.get(name, GENERIC_BASELINE)
        b = cls(base["RS"], base["RSW"], base["SA"], base["x_init"])
        for k, v in overrides.items():
            if v is not None:
                setattr(b, k, v)
        return b


def compare(fn: BenchFunction, cfg: EngineConfig, budgets: BaselineBudgets, seed: int = 0,
            domain: Optional[SearchDomain] = None,
            backend: ExecutionBackend = ExecutionBackend.serial(),
            algorithms: Sequence[str] = ("SLM", "RS", "RSW", "SA")) -> List[ComparisonRow]:
    d = domain or fn.domain
    obj = fn.objective.with_sense(cfg.sense)
    rows = []
    for alg in algorithms:
        if alg == "SLM":
            rep = run(obj, d, cfg, backend)
            found, iters, value = rep.best.coords, rep.generations, rep.best.value
        elif alg == "RS":
            r = baselines.random_search(obj, d, budgets.rs, seed)
            found, iters, value = r.point, budgets.rs, r.value
        elif alg == "RSW":
            r = baselines.rsw(obj, d, budgets.rsw, seed, budgets.x_init, budgets.step_scale)
            found, iters, value = r.point, budgets.rsw, r.value
        elif alg == "SA":
            r = baselines.simulated_annealing(obj, d, budgets.sa, seed, budgets.schedule)
            found, iters, value = r.point, budgets.sa, r.value
        else:
            raise ConfigurationError(f"unknown algorithm {alg!r}")
        rows.append(ComparisonRow(alg, iters, tuple(found), fn.nearest_minimizer(found), value))
    return rows


@dataclass
class BenchResult:
    rows: List[SpeedupRow]
    reports: Dict[tuple, RunReport] = field(default_factory=dict, repr=False)


def _mean_time(fn_obj, d, cfg, backend, trials) -> tuple:
    times, rep = [], None
    for _ in range(trials):
        rep = run(fn_obj, d, cfg, backend)
        times.append(rep.wall_time)
    return statistics.fmean(times), rep


def bench(fn: BenchFunction, cfg: EngineConfig, sweep: Sequence[int], trials: int = 30,
          delay: float = 0.0, domain: Optional[SearchDomain] = None,
          kinds: Sequence[BackendKind] = tuple(BackendKind),
          hardware_cap: Optional[int] = None) -> BenchResult:
    """Mean wall time per backend and worker count, with the derived columns."""
    if trials < 1:
        raise ConfigurationError(f"trials must be >= 1, got {trials}")
    if not sweep or any(p < 1 for p in sweep):
        raise ConfigurationError(f"worker sweep must be non-empty and >= 1, got {list(sweep)}")
    cap = hardware_cap or os.cpu_count() or 1
    d = domain or fn.domain
    obj = with_delay(fn.objective, delay)
    result = BenchResult([])
    for kind in kinds:
        timed = {1: _mean_time(obj, d, cfg, ExecutionBackend(kind, 1), trials)}
        t1 = timed[1][0]
        for p in sweep:
            if p > cap:
                warnings.warn(f"NP={p} exceeds the {cap} available cores", RuntimeWarning, stacklevel=2)
            if p not in timed:
                timed[p] = _mean_time(obj, d, cfg, ExecutionBackend(kind, p), trials)
            tp, rep = timed[p]
            result.rows.append(speedup_row(kind.value, t1, tp, p, rep.evaluations))
            result.reports[(kind.value, p)] = rep
            log.info("%s NP=%d: %.4fs", kind.value, p, tp)
    return result
