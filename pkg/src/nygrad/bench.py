"""Benchmark harness: solver-by-problem matrices, performance profiles and
line-search statistics, with CSV and JSON output.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import warnings
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from typing import Iterable, Sequence

import numpy as np

from .model import QuadraticProblem, RunReport, SolverConfig, Status
from .problems import DEFAULT_KAPPA, GENERAL_NAMES, QUADRATIC_NAMES, get_problem
from .solvers import Strategy, solve_ny, solve_strategy

log = logging.getLogger(__name__)

METRICS = {
    "time": "time_s",
    "iterations": "iterations",
    "f_evals": "f_evals",
    "fevals": "f_evals",
    "g_evals": "g_evals",
    "gevals": "g_evals",
}
# floors keep ratios finite when a solver needs no evaluations at all
_FLOORS = {"time_s": 1e-6, "iterations": 1, "f_evals": 1, "g_evals": 1}

SUITE_SOLVERS = ("any", "abbmin", "mpsg", "sl-yv")
SUITE_PROBLEMS = QUADRATIC_NAMES + GENERAL_NAMES
SUITE_SIZES = (10 ** 4, 10 ** 5)


@dataclass(frozen=True)
class ResultRow:
    problem: str
    n: int
    solver: str
    seed: int
    status: str
    iterations: int
    f_evals: int
    g_evals: int
    ls_extra: int
    final_gnorm: float
    time_s: float

    @property
    def solved(self) -> bool:
        return self.status == Status.CONVERGED.value

    @classmethod
    def from_report(cls, problem: str, n: int, solver: str, seed: int,
                    rep: RunReport) -> "ResultRow":
        return cls(problem, n, solver, seed, str(rep.status), rep.iterations, rep.f_evals,
                   rep.g_evals, rep.ls_extra_trials, float(rep.final_gnorm),
                   max(0.0, float(rep.wall_time)))


COLUMNS = tuple(f.name for f in fields(ResultRow))
_INT_COLUMNS = {"n", "seed", "iterations", "f_evals", "g_evals", "ls_extra"}
_FLOAT_COLUMNS = {"final_gnorm", "time_s"}


def _cell(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def rows_to_csv(rows: Iterable[ResultRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([_cell(getattr(r, c)) for c in COLUMNS])
    return buf.getvalue()


def rows_from_csv(text: str) -> list[ResultRow]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != COLUMNS:
        raise ValueError(f"unexpected CSV header {reader.fieldnames}")
    out = []
    for rec in reader:
        kw = {}
        for c in COLUMNS:
            v = rec[c]
            kw[c] = int(v) if c in _INT_COLUMNS else float(v) if c in _FLOAT_COLUMNS else v
        out.append(ResultRow(**kw))
    return out


def rows_to_json(rows: Iterable[ResultRow]) -> str:
    # nan/inf are not valid JSON numbers, so they go out as null
    def clean(d):
        return {k: (None if isinstance(v, float) and not math.isfinite(v) else v)
                for k, v in d.items()}
    return json.dumps([clean(asdict(r)) for r in rows], indent=1)


def rows_from_json(text: str) -> list[ResultRow]:
    out = []
    for d in json.loads(text):
        d = {k: (float("nan") if v is None and k in _FLOAT_COLUMNS else v) for k, v in d.items()}
        out.append(ResultRow(**d))
    return out


def write_rows(rows: Sequence[ResultRow], path: str) -> None:
    text = rows_to_json(rows) if path.endswith(".json") else rows_to_csv(rows)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def read_rows(path: str) -> list[ResultRow]:
    with open(path, newline="") as fh:
        text = fh.read()
    return rows_from_json(text) if path.endswith(".json") else rows_from_csv(text)


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    n: int
    kappa: float = DEFAULT_KAPPA

    @property
    def quadratic(self) -> bool:
        return self.name in QUADRATIC_NAMES


def compatible(solver: str, spec: ProblemSpec) -> bool:
    return spec.quadratic or not Strategy.parse(solver).quadratic_only


def run_cell(solver: str, spec: ProblemSpec, cfg: SolverConfig, seed: int) -> ResultRow:
    """Build one problem and solve it; failures become row data."""
    problem = get_problem(spec.name, spec.n, spec.kappa, seed)
    strategy = Strategy.parse(solver)
    cfg = cfg.replace(seed=seed)
    if strategy.name == "any" and isinstance(problem, QuadraticProblem):
        # quadratic rows of the "any" column use the NY method
        log.info("%s: running the NY method for solver 'any' on a quadratic", spec.name)
        rep = solve_ny(problem, cfg)
    else:
        rep = solve_strategy(problem, strategy, cfg)
    return ResultRow.from_report(spec.name, spec.n, strategy.label, seed, rep)


def _threads() -> int:
    env = os.environ.get("GRADBENCH_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"GRADBENCH_THREADS must be an integer, got {env!r}") from None
    return min(4, os.cpu_count() or 1)


def _sort_key(r: ResultRow):
    return (r.problem, r.n, r.solver, r.seed)


def run_matrix(solvers: Sequence[str], problems: Sequence[ProblemSpec],
               cfg: SolverConfig = SolverConfig(), repetitions: int = 1) -> list[ResultRow]:
    """Run every compatible (solver, problem, repetition) cell.

    Repetition ``r`` uses seed ``cfg.seed + r``. Cells that pair a
    quadratic-only solver with a general objective are skipped with a log
    message. Rows are returned sorted by problem, n, solver and seed.
    """
    if not solvers or not problems:
        raise ValueError("solvers and problems must be non-empty")
    if repetitions < 1:
        raise ValueError("repetitions must be positive")
    for s in solvers:
        Strategy.parse(s)
    cells = []
    for spec in problems:
        for s in solvers:
            if not compatible(s, spec):
                log.info("skipping %s on %s: needs a quadratic", s, spec.name)
                continue
            cells.extend((s, spec, cfg.seed + r) for r in range(repetitions))

    def work(cell):
        s, spec, seed = cell
        try:
            return run_cell(s, spec, cfg, seed)
        except (ArithmeticError, FloatingPointError) as e:
            log.warning("%s on %s failed: %s", s, spec.name, e)
            return ResultRow(spec.name, spec.n, Strategy.parse(s).label, seed,
                             Status.NUMERICAL_FAILURE.value, 0, 0, 0, 0, float("nan"), 0.0)

    threads = _threads()
    if threads == 1:
        rows = [work(c) for c in cells]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(work, cells))
    return sorted(rows, key=_sort_key)


def standard_suite(sizes: Sequence[int] = SUITE_SIZES,
                names: Sequence[str] = SUITE_PROBLEMS) -> list[ProblemSpec]:
    specs = []
    for name in names:
        for n in sizes:
            if name == "dixmaanj":
                n -= n % 3
            specs.append(ProblemSpec(name, n))
    return specs


@dataclass(frozen=True)
class ProfileCurve:
    """Dolan-More performance profile of one solver.

    ``rho[j]`` is the fraction of problems solved within ratio ``tau[j]``
    of the best solver; the curve is a right-continuous step function.
    """

    solver: str
    tau: tuple
    rho: tuple

    def at(self, t: float) -> float:
        j = np.searchsorted(self.tau, t, side="right")
        return 0.0 if j == 0 else float(self.rho[j - 1])

    @property
    def solved_fraction(self) -> float:
        return float(self.rho[-1]) if self.rho else 0.0


def _aggregate(rows: Sequence[ResultRow], column: str):
    """Mean metric per (problem, n, solver); inf unless every seed converged."""
    groups = defaultdict(list)
    for r in rows:
        groups[(r.problem, r.n), r.solver].append(r)
    out = {}
    floor = _FLOORS[column]
    for key, rs in groups.items():
        if all(r.solved for r in rs):
            out[key] = max(floor, float(np.mean([getattr(r, column) for r in rs])))
        else:
            out[key] = math.inf
    return out


def performance_profile(rows: Sequence[ResultRow], metric: str = "time") -> list[ProfileCurve]:
    """Performance profiles over the problems in ``rows``.

    Repetitions of a (problem, n) pair are averaged; a solver counts as
    unsolved there unless all its repetitions converged. Problems no solver
    solved are dropped with a warning.
    """
    try:
        column = METRICS[metric]
    except KeyError:
        raise ValueError(f"metric must be one of {sorted(METRICS)}") from None
    if not rows:
        raise ValueError("no rows")
    agg = _aggregate(rows, column)
    solvers = sorted({s for _, s in agg})
    problems = sorted({p for p, _ in agg})
    ratios = {s: [] for s in solvers}
    kept = 0
    for p in problems:
        vals = {s: agg.get((p, s), math.inf) for s in solvers}
        best = min(vals.values())
        if math.isinf(best):
            warnings.warn(f"no solver solved {p[0]} (n={p[1]}); excluded from the profile")
            continue
        kept += 1
        for s in solvers:
            ratios[s].append(vals[s] / best)
    curves = []
    for s in solvers:
        r = np.sort(np.asarray(ratios[s], dtype=float))
        finite = r[np.isfinite(r)]
        tau = tuple(float(t) for t in np.unique(finite))
        rho = tuple(float(np.sum(finite <= t)) / kept for t in tau) if kept else ()
        curves.append(ProfileCurve(s, tau, rho))
    return curves


def profile_table(curves: Sequence[ProfileCurve], points: int = 200) -> str:
    """CSV of the curves sampled on an even ``log2(tau)`` grid."""
    top = max([c.tau[-1] for c in curves if c.tau] + [1.0])
    grid = np.linspace(0.0, max(np.log2(top), 1.0), points)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["log2_tau"] + [c.solver for c in curves])
    for lt in grid:
        w.writerow([repr(float(lt))] + [repr(c.at(2.0 ** lt)) for c in curves])
    return buf.getvalue()


@dataclass(frozen=True)
class LineSearchSummary:
    per_problem: dict
    mean: float


def avg_ls_counts(rows: Sequence[ResultRow], converged_only: bool = True) -> dict:
    """Extra line-search evaluations per iteration, by solver.

    For each solver and (problem, n), ``sum ls_extra / sum iterations``;
    ``mean`` averages these over problems. Rows with zero iterations are
    ignored.
    """
    acc = defaultdict(lambda: [0, 0])
    for r in rows:
        if r.iterations == 0 or (converged_only and not r.solved):
            continue
        a = acc[r.solver, (r.problem, r.n)]
        a[0] += r.ls_extra
        a[1] += r.iterations
    out = {}
    for solver in sorted({s for s, _ in acc}):
        per = {p: e / it for (s, p), (e, it) in acc.items() if s == solver}
        out[solver] = LineSearchSummary(per, float(np.mean(list(per.values()))))
    return out


def summarize(rows: Sequence[ResultRow]) -> str:
    """Plain-text table of mean iterations per (problem, n, solver)."""
    groups = defaultdict(list)
    for r in rows:
        groups[r.problem, r.n, r.solver].append(r)
    lines = [f"{'problem':<10} {'n':>8} {'solver':<8} {'solved':>7} {'iter':>9} {'time_s':>9}"]
    for (p, n, s), rs in sorted(groups.items()):
        ok = sum(r.solved for r in rs)
        it = np.mean([r.iterations for r in rs])
        t = np.mean([r.time_s for r in rs])
        lines.append(f"{p:<10} {n:>8} {s:<8} {ok:>3}/{len(rs):<3} {it:>9.1f} {t:>9.3f}")
    return "\n".join(lines)
