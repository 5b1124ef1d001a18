"""Command line front end: ``slm run | compare | bench``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from .benchfuncs import FUNCTIONS, get_function, with_delay
from .engine import SCHEMA_VERSION, EngineConfig, RunReport, final_points, run
from .grid import DomainError, SearchDomain
from .harness import (ALGORITHM_ALIASES, COMPARISON_HEADER, SPEEDUP_HEADER, BaselineBudgets,
                      compare, bench, fmt_point, to_csv)
from .labeling import ConfigurationError, LabelingStrategy, Sense
from .runtime import BackendKind, ExecutionBackend, default_workers

log = logging.getLogger("slmopt")

RUN_HEADER = ["generation", "h", "point", "mutated point", "label", "solution"]

DEFAULTS = {
    "function": "f1",
    "domain": None,
    "generations": None,
    "h_tol": 1e-9,
    "strategy": "best-neighbor",
    "backend": None,
    "workers": None,
    "sweep": "1..10",
    "trials": 30,
    "delay_ms": 0.0,
    "seed": 0,
    "multimodal": False,
    "sense": "min",
    "output": None,
    "format": None,
    "rs_budget": None,
    "rsw_budget": None,
    "sa_budget": None,
    "literal_f2": False,
    "dump_clusters": None,
}
INT_KEYS = {"generations", "workers", "trials", "seed", "rs_budget", "rsw_budget", "sa_budget"}
FLOAT_KEYS = {"h_tol", "delay_ms"}
BOOL_KEYS = {"multimodal", "literal_f2"}


class UsageError(ValueError):
    pass


def parse_domain(text: str, n: int) -> SearchDomain:
    """``lo,hi`` for every axis, or ``lo,hi;lo,hi;...`` per axis."""
    try:
        pairs = [tuple(float(v) for v in part.split(",")) for part in text.split(";") if part.strip()]
    except ValueError:
        raise UsageError(f"cannot parse domain {text!r}") from None
    if not pairs or any(len(p) != 2 for p in pairs):
        raise UsageError(f"domain must be lo,hi[;lo,hi...], got {text!r}")
    if len(pairs) == 1:
        pairs = pairs * n
    if len(pairs) != n:
        raise UsageError(f"domain has {len(pairs)} axes, function needs {n}")
    try:
        return SearchDomain(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))
    except DomainError as exc:
        raise UsageError(str(exc)) from None


def parse_sweep(text: str) -> List[int]:
    """``1..10`` or ``1,2,4``."""
    try:
        if ".." in text:
            a, b = text.split("..")
            out = list(range(int(a), int(b) + 1))
        else:
            out = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"cannot parse sweep {text!r}") from None
    if not out or any(p < 1 for p in out):
        raise UsageError(f"sweep values must be >= 1, got {text!r}")
    return out


def read_config(path: str) -> Dict[str, object]:
    """``key = value`` lines; ``#`` starts a comment; keys use flag names."""
    out: Dict[str, object] = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        if key not in DEFAULTS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = _coerce(key, value)
    return out


def _coerce(key: str, value):
    if value is None:
        return None
    try:
        if key in INT_KEYS:
            return int(value)
        if key in FLOAT_KEYS:
            return float(value)
    except ValueError:
        raise UsageError(f"{key} expects a number, got {value!r}") from None
    if key in BOOL_KEYS and isinstance(value, str):
        return value.lower() in ("1", "true", "yes", "on")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file; flags take precedence")
    common.add_argument("--function", choices=sorted(FUNCTIONS))
    common.add_argument("--domain", help="lo,hi[;lo,hi...]")
    common.add_argument("--generations", type=int)
    common.add_argument("--h-tol", type=float, dest="h_tol")
    common.add_argument("--strategy", choices=[s.value for s in LabelingStrategy])
    common.add_argument("--backend", choices=[k.value for k in BackendKind])
    common.add_argument("--workers", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--multimodal", action="store_const", const=True)
    common.add_argument("--sense", choices=[s.value for s in Sense])
    common.add_argument("--output", help="write here instead of stdout")
    common.add_argument("--format", choices=["csv", "json"])
    common.add_argument("--delay-ms", type=float, dest="delay_ms")
    common.add_argument("--literal-f2", action="store_const", const=True, dest="literal_f2",
                        help="use the unsquared saddle variant of dejong-f2 (demo)")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(prog="slm", description="Subdivision labeling optimizer")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", parents=[common], help="one optimisation run")
    p_run.add_argument("--dump-clusters", dest="dump_clusters",
                       help="write the point/cluster tables as CSV (clustered backend)")
    p_cmp = sub.add_parser("compare", parents=[common], help="SLM against RS, RSW and SA")
    p_cmp.add_argument("--rs-budget", type=int, dest="rs_budget")
    p_cmp.add_argument("--rsw-budget", type=int, dest="rsw_budget")
    p_cmp.add_argument("--sa-budget", type=int, dest="sa_budget")
    p_bench = sub.add_parser("bench", parents=[common], help="speedup / efficiency sweep")
    p_bench.add_argument("--sweep", help="worker counts, e.g. 1..10 or 1,2,4")
    p_bench.add_argument("--trials", type=int)
    return parser


def resolve(args: argparse.Namespace) -> Dict[str, object]:
    opts = dict(DEFAULTS)
    if args.config:
        opts.update(read_config(args.config))
    for key in DEFAULTS:
        v = getattr(args, key, None)
        if v is not None:
            opts[key] = v
    return opts


def engine_config(opts, fn) -> EngineConfig:
    gens = opts["generations"] if opts["generations"] is not None else fn.generations
    if gens < 1:
        raise UsageError(f"--generations must be >= 1, got {gens}")
    if not opts["h_tol"] > 0:
        raise UsageError(f"--h-tol must be positive, got {opts['h_tol']}")
    return EngineConfig(strategy=LabelingStrategy(opts["strategy"]), h_tolerance=opts["h_tol"],
                        max_generations=gens, multimodal=bool(opts["multimodal"]),
                        sense=Sense(opts["sense"]))


def backend_from(opts, kind: Optional[str] = None) -> ExecutionBackend:
    kind = BackendKind(kind or opts["backend"] or "serial")
    workers = opts["workers"] if opts["workers"] is not None else default_workers()
    if workers < 1:
        raise UsageError(f"--workers must be >= 1, got {workers}")
    if kind is BackendKind.SERIAL:
        workers = 1
    return ExecutionBackend(kind, workers)


def run_csv(rep: RunReport) -> str:
    rows = []
    for t in rep.traces:
        sol = fmt_point(final_points(t, rep.config)[0].coords)
        h = fmt_point(t.step)
        for r in t.records:
            rows.append([t.generation, h, fmt_point(r.coords), fmt_point(r.mutant_coords), r.label, sol])
    return to_csv(RUN_HEADER, rows)


def _emit(text: str, output: Optional[str]) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _domain(opts, fn) -> SearchDomain:
    return parse_domain(opts["domain"], fn.domain.dimension) if opts["domain"] else fn.domain


def cmd_run(opts) -> str:
    fn = get_function(opts["function"], bool(opts["literal_f2"]))
    obj = with_delay(fn.objective, float(opts["delay_ms"]) / 1000.0)
    rep = run(obj, _domain(opts, fn), engine_config(opts, fn), backend_from(opts))
    if opts["dump_clusters"]:
        if rep.clusters is None:
            raise UsageError("--dump-clusters needs --backend clustered")
        Path(opts["dump_clusters"]).write_text(rep.clusters.to_csv(rep.domain))
    if (opts["format"] or "json") == "csv":
        return run_csv(rep)
    data = rep.to_dict()
    data["algorithm"] = ALGORITHM_ALIASES[rep.backend.name]
    return json.dumps(data, indent=2) + "\n"


def cmd_compare(opts) -> str:
    fn = get_function(opts["function"], bool(opts["literal_f2"]))
    for key in ("rs_budget", "rsw_budget", "sa_budget"):
        if opts[key] is not None and opts[key] < 1:
            raise UsageError(f"--{key.replace('_', '-')} must be >= 1, got {opts[key]}")
    budgets = BaselineBudgets.for_function(fn.name, rs=opts["rs_budget"], rsw=opts["rsw_budget"],
                                           sa=opts["sa_budget"])
    rows = compare(fn, engine_config(opts, fn), budgets, seed=opts["seed"], domain=_domain(opts, fn),
                   backend=backend_from(opts))
    if (opts["format"] or "csv") == "json":
        return json.dumps({
            "schema_version": SCHEMA_VERSION,
            "function": fn.name,
            "rows": [{"algorithm": r.algorithm, "iterations": r.iterations, "found": list(r.found),
                      "known": list(r.known), "error": list(r.error), "value": r.value} for r in rows],
        }, indent=2) + "\n"
    return to_csv(COMPARISON_HEADER, [r.cells() for r in rows])


def cmd_bench(opts) -> str:
    fn = get_function(opts["function"], bool(opts["literal_f2"]))
    sweep = parse_sweep(str(opts["sweep"]))
    if opts["trials"] < 1:
        raise UsageError(f"--trials must be >= 1, got {opts['trials']}")
    if opts["delay_ms"] < 0:
        raise UsageError("--delay-ms must be >= 0")
    kinds = [BackendKind(opts["backend"])] if opts["backend"] else list(BackendKind)
    res = bench(fn, engine_config(opts, fn), sweep, opts["trials"], opts["delay_ms"] / 1000.0,
                _domain(opts, fn), kinds)
    if (opts["format"] or "csv") == "json":
        return json.dumps({
            "schema_version": SCHEMA_VERSION,
            "function": fn.name,
            "aliases": ALGORITHM_ALIASES,
            "rows": [{"algorithm": r.algorithm, "np": r.np, "time": r.time, "lb_time": r.lb_time,
                      "speedup": r.speedup, "efficiency": r.efficiency, "evaluations": r.evaluations}
                     for r in res.rows],
        }, indent=2) + "\n"
    return to_csv(SPEEDUP_HEADER, [r.cells() for r in res.rows])


COMMANDS = {"run": cmd_run, "compare": cmd_compare, "bench": cmd_bench}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        opts = resolve(args)
        if opts["function"] not in FUNCTIONS:
            raise UsageError(f"unknown function {opts['function']!r}")
        _emit(COMMANDS[args.command](opts), opts["output"])
    except (UsageError, ConfigurationError, DomainError, KeyError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"slm {args.command}: error: {msg}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
