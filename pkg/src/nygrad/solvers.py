"""Gradient solvers: the NY method for quadratics, ANY for general objectives,
and the comparison methods (SD, BB family, ABBmin, MPSG, SDC, SL).
"""
from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass
from typing import NamedTuple, Optional, Union

import numpy as np

from .linesearch import NonmonotoneMemory, asd, gll_backtrack, improved_gll
from .model import (
    IterationTrace,
    LineSearchFailure,
    NumericalFailure,
    Objective,
    QuadraticProblem,
    RunReport,
    SolverConfig,
    Status,
    StepHistory,
    StepKind,
    StepRecord,
)
from .stepsize import (
    abbmin,
    mpsg,
    ny_coefficients,
    ny_stepsize,
    ny_stepsizes,
    yuan,
    yuan_variant,
)

SL_VARIANTS = ("yv", "hm", "fmin", "fmax")


@dataclass(frozen=True)
class Strategy:
    """A stepsize strategy and its parameters.

    ``T`` of ``None`` means the cycle length from the :class:`SolverConfig`.
    """

    name: str
    T: Optional[int] = None
    h: int = 2
    m: int = 4
    variant: str = "yv"

    NAMES = ("sd", "bb1", "bb2", "abbmin", "mpsg", "sdc", "sl", "ny", "any")

    def __post_init__(self):
        if self.name not in self.NAMES:
            raise ValueError(f"unknown strategy {self.name!r}")
        if self.T is not None and self.T < 3:
            raise ValueError("T must be at least 3")
        if self.h < 2 or self.m < 1:
            raise ValueError("SDC needs h >= 2 and m >= 1")
        if self.variant not in SL_VARIANTS:
            raise ValueError(f"SL variant must be one of {SL_VARIANTS}")

    @classmethod
    def parse(cls, text: str) -> "Strategy":
        """Parse names such as ``"abbmin"``, ``"sl-yv"`` or ``"sl-fmin"``."""
        text = text.strip().lower()
        if text.startswith("sl-"):
            return cls("sl", variant=text[3:])
        return cls(text)

    @property
    def label(self) -> str:
        return f"sl-{self.variant}" if self.name == "sl" else self.name

    @property
    def quadratic_only(self) -> bool:
        return self.name in ("sd", "sdc", "sl", "ny")


class FiveStepResult(NamedTuple):
    x: np.ndarray
    gnorms: list
    path: str  # "ny", "yuan" or "trivial"


def five_step_3d(p: QuadraticProblem, gamma_tol: float = 1e-12) -> FiveStepResult:
    """Minimize a 3-D quadratic in five gradient steps.

    Two Cauchy steps, the two shortest NY stepsizes, then one Cauchy step.
    If the first three gradients span only a plane, Yuan's three-step scheme
    is run from the first iterate instead.
    """
    if p.n != 3:
        raise ValueError("five_step_3d needs a 3-dimensional problem")

    def grad(x):
        return p.matvec(x) + p.b

    def sd(g):
        return float(g @ g) / float(g @ p.matvec(g))

    x = p.x0.copy()
    g = grad(x)
    g0n = float(np.linalg.norm(g))
    gnorms = [g0n]
    if g0n == 0:
        return FiveStepResult(x, gnorms, "trivial")
    stop = 1e-14 * g0n

    xs, gs, sds = [], [], []
    for _ in range(2):
        a = sd(g)
        xs.append(x)
        gs.append(g)
        sds.append(a)
        x = x - a * g
        g = grad(x)
        gnorms.append(float(np.linalg.norm(g)))
        if gnorms[-1] <= stop:
            return FiveStepResult(x, gnorms, "trivial")

    sd2 = sd(g)
    try:
        c = ny_coefficients(sds[0], sds[1], sd2, gs[0], gs[1], g, gamma_tol)
        a1, a2, _ = ny_stepsizes(c)
    except NumericalFailure:
        # Yuan's scheme from x1: one Yuan step, then one Cauchy step
        x, g = xs[1], gs[1]
        gnorms = gnorms[:2]
        snorm = sds[0] * gnorms[0]
        steps = [yuan(sds[0], sds[1], gnorms[1], snorm)]
        path = "yuan"
    else:
        steps = [a1, a2]
        path = "ny"

    for a in steps:
        x = x - a * g
        g = grad(x)
        gnorms.append(float(np.linalg.norm(g)))
        if gnorms[-1] <= stop:
            return FiveStepResult(x, gnorms, path)
    x = x - sd(g) * g
    gnorms.append(float(np.linalg.norm(grad(x))))
    return FiveStepResult(x, gnorms, path)


class _Run:
    """Mutable per-run bookkeeping shared by the solver loops."""

    def __init__(self, cfg: SolverConfig, solver: str):
        self.cfg = cfg
        self.solver = solver
        self.t0 = time.perf_counter()
        self.trace: Optional[list] = [] if cfg.record_trace else None
        self.fallbacks = 0
        self.ls_extra = 0
        self.extra_config: dict = {}

    def record(self, k, f, gnorm, alpha, kind, evals=0, step=None):
        if self.trace is not None:
            step = alpha if step is None else step
            self.trace.append(IterationTrace(k, float(f), float(gnorm), float(alpha), kind,
                                             evals, float(step)))

    def report(self, status, k, f_evals, g_evals, gnorm, g0n, x, message="") -> RunReport:
        return RunReport(
            status=status,
            iterations=k,
            f_evals=f_evals,
            g_evals=g_evals,
            ls_extra_trials=self.ls_extra,
            final_gnorm=float(gnorm),
            gnorm0=float(g0n),
            wall_time=time.perf_counter() - self.t0,
            x=x,
            solver=self.solver,
            fallbacks=self.fallbacks,
            config={**self.cfg.as_dict(), **self.extra_config},
            trace=self.trace,
            message=message,
        )


def _safe_yv(sd_prev, sd_cur, gk, gp, default):
    try:
        a = yuan_variant(sd_prev, sd_cur, gk, gp)
    except ValueError:
        return default
    return a if np.isfinite(a) and a > 0 else default


class _QuadraticRule:
    """Chooses ``alpha_k`` for exact-step quadratic solvers.

    ``__call__`` gets the iteration, the Cauchy stepsize at ``x_k``, the
    gradient and ``H g``; it returns ``(alpha, kind, fell_back)``.
    """

    def __init__(self, strategy: Strategy, cfg: SolverConfig):
        self.s = strategy
        self.cfg = cfg
        self.T = strategy.T or cfg.T
        self.sds: deque = deque(maxlen=3)  # (sd, g, ||g||)
        self.prev: Optional[tuple] = None  # (alpha, kind)
        self.pairs: deque = deque(maxlen=cfg.bb_memory + 1)
        self.last_g = None

    def __call__(self, k, sd, g, Hg):
        gn = float(np.sqrt(g @ g))
        self.sds.append((sd, g, gn))
        name = self.s.name
        fb = False
        if name == "sd":
            out = (sd, StepKind.SD)
        elif name == "ny":
            slot = k % self.T
            if slot < 2:
                out = (sd, StepKind.SD)
            elif slot == 2:
                (s0, g0, _), (s1, g1, n1), (s2, g2, n2) = self.sds
                a, fb = ny_stepsize(s0, s1, s2, g0, g1, g2, self.cfg.gamma_tol)
                if fb:
                    a = _safe_yv(s1, s2, n2, n1, sd)
                out = (a, StepKind.YV if fb else StepKind.NY)
            else:
                out = self.prev
        elif name == "sdc":
            slot = k % (self.s.h + self.s.m)
            if slot < self.s.h:
                out = (sd, StepKind.SD)
            elif slot == self.s.h:
                (s1, _, n1), (s2, _, n2) = list(self.sds)[-2:]
                out = (_safe_yv(s1, s2, n2, n1, sd), StepKind.YV)
            else:
                out = self.prev
        elif name == "sl":
            slot = k % self.T
            if slot < 2:
                out = (sd, StepKind.SD)
            elif slot == 2:
                # fixed step from the two Cauchy steps of the previous slots
                (a, _, na), (b, _, nb), _ = self.sds
                v = self.s.variant
                if v == "yv":
                    f = _safe_yv(a, b, nb, na, b)
                elif v == "hm":
                    f = 1.0 / (1.0 / a + 1.0 / b)
                elif v == "fmin":
                    f = min(a, b)
                else:
                    f = max(a, b)
                out = (f, StepKind.FIXED)
            else:
                out = self.prev
        else:
            out = self._bb(k, sd, g, Hg)
        self.prev = out
        return out[0], out[1], fb

    def _bb(self, k, sd, g, Hg):
        if self.prev is not None:
            # s = -alpha g_prev and y = H s for the step just taken
            a = self.prev[0]
            gp, Hgp = self.last_g
            s, y = -a * gp, -a * Hgp
            self.pairs.append(StepRecord(k=k, x=None, g=None, f=np.nan, s=s, y=y,
                                         ss=float(s @ s), sy=float(s @ y), yy=float(y @ y)))
        self.last_g = (g, Hg)
        if not self.pairs:
            return sd, StepKind.SD
        return _bb_choice(self.s.name, list(self.pairs), self.cfg)


def _bb_choice(name: str, pairs: list, cfg: SolverConfig):
    last = pairs[-1]
    if not last.sy > 0:
        return cfg.alpha_max, StepKind.BB1
    b1 = last.ss / last.sy
    b2 = last.sy / last.yy
    if name == "bb1":
        return b1, StepKind.BB1
    if name == "bb2":
        return b2, StepKind.BB2
    if name == "abbmin":
        a = abbmin(pairs, cfg.tau1, cfg.bb_memory, cfg.alpha_max)
        return a, StepKind.BB1 if a == b1 else StepKind.BB2
    try:
        a = mpsg(pairs, cfg.tau2, cfg.bb_memory)
    except NumericalFailure:
        return cfg.alpha_max, StepKind.BB1
    return a, StepKind.BB1 if a >= b1 else StepKind.BB2


def _solve_quadratic(p: QuadraticProblem, strategy: Strategy, cfg: SolverConfig) -> RunReport:
    run = _Run(cfg, strategy.label)
    run.extra_config = {"strategy": strategy.label, "T": strategy.T or cfg.T}
    if strategy.name == "sdc":
        run.extra_config.update(h=strategy.h, m=strategy.m)
    rule = _QuadraticRule(strategy, cfg)
    x = p.x0.copy()
    g = p.matvec(x) + p.b
    g_evals = 1
    g0n = float(np.linalg.norm(g))
    if g0n == 0:
        return run.report(Status.CONVERGED, 0, 0, g_evals, 0.0, 0.0, x)
    tol = cfg.epsilon * g0n
    gn = g0n
    k = 0
    while True:
        if gn <= tol:
            # the recurrence drifts from H x + b; confirm with a fresh gradient
            g = p.matvec(x) + p.b
            g_evals += 1
            gn = float(np.linalg.norm(g))
            if gn <= tol:
                return run.report(Status.CONVERGED, k, 0, g_evals, gn, g0n, x)
        if k >= cfg.max_iter:
            return run.report(Status.MAX_ITERATIONS, k, 0, g_evals, gn, g0n, x)
        Hg = p.matvec(g)
        gHg = float(g @ Hg)
        if not (gHg > 0 and np.isfinite(gHg)):
            return run.report(Status.NUMERICAL_FAILURE, k, 0, g_evals, gn, g0n, x,
                              f"g'Hg = {gHg!r}")
        sd = gn * gn / gHg
        alpha, kind, fb = rule(k, sd, g, Hg)
        run.fallbacks += fb
        x = x - alpha * g
        g = g - alpha * Hg
        g_evals += 1
        gn = float(np.linalg.norm(g))
        k += 1
        if run.trace is not None:
            run.record(k - 1, 0.5 * float(x @ (g + p.b)), gn, alpha, kind)
        if not np.isfinite(gn):
            return run.report(Status.NUMERICAL_FAILURE, k, 0, g_evals, gn, g0n, x,
                              "non-finite gradient")


def solve_ny(p: QuadraticProblem, cfg: SolverConfig = SolverConfig()) -> RunReport:
    """Cyclic NY method for a strictly convex quadratic.

    In each cycle of length ``T`` the first two steps are Cauchy steps, the
    third is the shortest NY stepsize and the rest reuse it. The gradient is
    updated by the recurrence ``g <- g - alpha H g``, one Hessian product per
    iteration; ``f_evals`` is therefore zero.
    """
    if not isinstance(p, QuadraticProblem):
        raise ValueError("solve_ny needs a QuadraticProblem")
    return _solve_quadratic(p, Strategy("ny"), cfg)


def _check_finite(f, g):
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        raise NumericalFailure("non-finite objective value or gradient")


def solve_any(obj: Union[Objective, QuadraticProblem],
              cfg: SolverConfig = SolverConfig()) -> RunReport:
    """ANY method for a general smooth objective.

    Cauchy steps are replaced by approximated Cauchy (ASD) steps, trial
    stepsizes are clamped to ``[alpha_min, alpha_max]`` and accepted by the
    improved GLL nonmonotone line search.
    """
    if isinstance(obj, QuadraticProblem):
        obj = obj.as_objective()
    obj = obj.fresh()
    run = _Run(cfg, "any")
    T = cfg.T
    x = obj.x0.copy()
    f = obj.value(x)
    g = obj.gradient(x)
    try:
        _check_finite(f, g)
    except NumericalFailure as e:
        return run.report(Status.NUMERICAL_FAILURE, 0, obj.f_evals, obj.g_evals,
                          np.nan, np.nan, x, str(e))
    g0n = float(np.linalg.norm(g))
    gn = g0n
    if g0n == 0:
        return run.report(Status.CONVERGED, 0, obj.f_evals, obj.g_evals, 0.0, 0.0, x)
    tol = cfg.epsilon * g0n
    mem = NonmonotoneMemory(cfg.M, f)
    sds: deque = deque(maxlen=3)
    beta = 1.0
    prev = None
    k = 0
    with np.errstate(over="ignore", invalid="ignore"):
        while gn > tol:
            if k >= cfg.max_iter:
                return run.report(Status.MAX_ITERATIONS, k, obj.f_evals, obj.g_evals, gn, g0n, x)
            slot = k % T
            evals = 0
            if slot <= 2:
                r = asd(obj, x, f, g, beta, cfg.asd_max_refine, cfg.alpha_min, cfg.alpha_max)
                evals = r.f_evals
                sds.append((r.alpha, g, gn, r.degenerate))
                if slot < 2:
                    alpha, kind = r.alpha, StepKind.ASD
                elif any(d[3] for d in sds):
                    # a failed fit makes the curvature estimates meaningless
                    run.fallbacks += 1
                    alpha, kind = r.alpha, StepKind.ASD
                else:
                    (s0, g0, _, _), (s1, g1, n1, _), (s2, g2, n2, _) = sds
                    alpha, fb = ny_stepsize(s0, s1, s2, g0, g1, g2, cfg.gamma_tol)
                    if fb:
                        run.fallbacks += 1
                        alpha = _safe_yv(s1, s2, n2, n1, r.alpha)
                    kind = StepKind.YV if fb else StepKind.ANY
            else:
                alpha, kind = prev
            alpha = min(max(alpha, cfg.alpha_min), cfg.alpha_max)
            prev = (alpha, kind)
            try:
                ls = improved_gll(obj, x, g, mem, alpha, cfg.delta, cfg.L_max)
            except LineSearchFailure as e:
                return run.report(Status.LINE_SEARCH_FAILURE, k, obj.f_evals, obj.g_evals,
                                  gn, g0n, x, str(e))
            x, f = ls.x, ls.f
            g = obj.gradient(x)
            k += 1
            run.ls_extra += ls.extra_trials
            try:
                _check_finite(f, g)
            except NumericalFailure as e:
                return run.report(Status.NUMERICAL_FAILURE, k, obj.f_evals, obj.g_evals,
                                  np.nan, g0n, x, str(e))
            mem.push(f)
            beta = ls.step
            gn = float(np.linalg.norm(g))
            run.record(k - 1, f, gn, alpha, kind, evals, ls.step)
    return run.report(Status.CONVERGED, k, obj.f_evals, obj.g_evals, gn, g0n, x)


def _solve_bb_general(obj: Objective, strategy: Strategy, cfg: SolverConfig) -> RunReport:
    obj = obj.fresh()
    run = _Run(cfg, strategy.label)
    run.extra_config = {"strategy": strategy.label}
    x = obj.x0.copy()
    f = obj.value(x)
    g = obj.gradient(x)
    try:
        _check_finite(f, g)
    except NumericalFailure as e:
        return run.report(Status.NUMERICAL_FAILURE, 0, obj.f_evals, obj.g_evals,
                          np.nan, np.nan, x, str(e))
    g0n = float(np.linalg.norm(g))
    gn = g0n
    if g0n == 0:
        return run.report(Status.CONVERGED, 0, obj.f_evals, obj.g_evals, 0.0, 0.0, x)
    tol = cfg.epsilon * g0n
    mem = NonmonotoneMemory(cfg.M, f)
    hist = StepHistory(capacity=max(3, cfg.bb_memory + 2))
    hist.push(0, x, g, f)
    k = 0
    with np.errstate(over="ignore", invalid="ignore"):
        while gn > tol:
            if k >= cfg.max_iter:
                return run.report(Status.MAX_ITERATIONS, k, obj.f_evals, obj.g_evals, gn, g0n, x)
            if k == 0:
                alpha, kind = 1.0 / float(np.max(np.abs(g))), StepKind.BB1
            else:
                alpha, kind = _bb_choice(strategy.name, hist.pairs(), cfg)
            alpha = min(max(alpha, cfg.alpha_min), cfg.alpha_max)
            try:
                ls = gll_backtrack(obj, x, g, mem, alpha, cfg.delta, cfg.rho, cfg.L_max)
            except LineSearchFailure as e:
                return run.report(Status.LINE_SEARCH_FAILURE, k, obj.f_evals, obj.g_evals,
                                  gn, g0n, x, str(e))
            x, f = ls.x, ls.f
            g = obj.gradient(x)
            k += 1
            run.ls_extra += ls.extra_trials
            try:
                _check_finite(f, g)
            except NumericalFailure as e:
                return run.report(Status.NUMERICAL_FAILURE, k, obj.f_evals, obj.g_evals,
                                  np.nan, g0n, x, str(e))
            mem.push(f)
            hist.push(k, x, g, f)
            hist[-2].step = ls.step
            gn = float(np.linalg.norm(g))
            run.record(k - 1, f, gn, alpha, kind, step=ls.step)
    return run.report(Status.CONVERGED, k, obj.f_evals, obj.g_evals, gn, g0n, x)


def solve_strategy(problem: Union[QuadraticProblem, Objective], strategy: Union[Strategy, str],
                   cfg: SolverConfig = SolverConfig()) -> RunReport:
    """Run any supported strategy on a quadratic or general objective.

    Quadratics use exact Hessian products and no line search. General
    objectives support the BB family (with GLL backtracking) and ANY.
    """
    if isinstance(strategy, str):
        strategy = Strategy.parse(strategy)
    if strategy.T is not None and strategy.T != cfg.T:
        cfg = cfg.replace(T=strategy.T)
    if isinstance(problem, QuadraticProblem):
        if strategy.name == "any":
            return solve_any(problem, cfg)
        return _solve_quadratic(problem, strategy, cfg)
    if not isinstance(problem, Objective):
        raise ValueError("problem must be a QuadraticProblem or an Objective")
    if strategy.quadratic_only:
        raise ValueError(f"strategy {strategy.label!r} needs a QuadraticProblem")
    if strategy.name == "any":
        return solve_any(problem, cfg)
    return _solve_bb_general(problem, strategy, cfg)
