"""Acceptance gate: one test and one PASS/FAIL line per primary criterion."""
import time

import numpy as np

from nygrad import SolverConfig, five_step_3d, solve_any, solve_ny
from nygrad.bench import ProblemSpec, avg_ls_counts, run_matrix
from nygrad.linesearch import NonmonotoneMemory, asd, improved_gll
from nygrad.model import Objective, QuadraticProblem, gradient_check
from nygrad.problems import (GENERAL_NAMES, get_problem, make_problem_2, make_problem_3,
                             random_spd_quadratic)
from nygrad.stepsize import (cauchy_exact, ny_coefficients, ny_stepsize,
                             ny_stepsizes, yuan_variant)


def _two_sd_steps(p):
    x = p.x0.copy()
    gs, sds = [], []
    for _ in range(3):
        g = p.gradient(x)
        a = cauchy_exact(g, p)
        gs.append(g)
        sds.append(a)
        x = x - a * g
    return sds, gs


def test_c01_five_step_termination(acceptance_line):
    t0 = time.perf_counter()
    worst = 0.0
    for seed in range(200):
        p = random_spd_quadratic(3, kappa=1e4, seed=seed)
        res = five_step_3d(p)
        worst = max(worst, res.gnorms[-1] / res.gnorms[0])
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-8 and elapsed < 1.0
    acceptance_line(1, "five-step termination on 200 3-D quadratics", ok,
                    f"worst |g5|/|g0| = {worst:.2e}, {elapsed:.2f} s")
    assert ok


def test_c02_finite_termination_2T_plus_1(acceptance_line):
    failures = {}
    for T in (3, 5, 7):
        cfg = SolverConfig(T=T, epsilon=1e-8, max_iter=200)
        bad = 0
        for seed in range(100):
            rep = solve_ny(random_spd_quadratic(3, kappa=1e4, seed=seed), cfg)
            if not (rep.converged and rep.iterations <= 2 * T + 1):
                bad += 1
        failures[T] = bad
    ok = not any(failures.values())
    detail = ", ".join(f"T={T}: {b}/100 over budget" for T, b in failures.items())
    acceptance_line(2, "solve_ny terminates within 2T+1 iterations", ok, detail)
    assert ok


def test_c03_eigenvalue_recovery(acceptance_line):
    worst = 0.0
    for seed in range(200):
        p = random_spd_quadratic(3, kappa=1e4, seed=seed)
        sds, gs = _two_sd_steps(p)
        mus = np.sort(1.0 / np.asarray(ny_stepsizes(ny_coefficients(*sds, *gs))))
        lam = np.linalg.eigvalsh(p.hessian)
        worst = max(worst, float(np.max(np.abs(mus - lam) / lam)))
    ok = worst <= 1e-8
    acceptance_line(3, "reciprocal NY stepsizes recover eig(H)", ok,
                    f"worst relative error {worst:.2e}")
    assert ok


def test_c04_ordering_and_degeneration(acceptance_line):
    rng = np.random.default_rng(4)
    unordered = 0
    checked = 0
    for seed in range(300):
        p = random_spd_quadratic(3, kappa=10 ** rng.uniform(0, 4), seed=1000 + seed)
        sds, gs = _two_sd_steps(p)
        try:
            a = ny_stepsizes(ny_coefficients(*sds, *gs))
        except ArithmeticError:
            continue
        checked += 1
        unordered += not (a[0] <= a[1] <= a[2])
    worst = 0.0
    for seed in range(100):
        r = np.random.default_rng(seed)
        lam = np.sort(r.uniform(1, 100, 3))
        x0 = np.array([r.normal(), r.normal(), 0.0])
        p = QuadraticProblem(lam, np.zeros(3), x0)
        sds, gs = _two_sd_steps(p)
        alpha, _ = ny_stepsize(*sds, *gs)
        yv = yuan_variant(sds[1], sds[2], np.linalg.norm(gs[2]), np.linalg.norm(gs[1]))
        # in the plane of e1, e2 the Yuan step is 1/max(lam1, lam2)
        worst = max(worst, abs(alpha - yv) / yv, abs(yv * lam[1] - 1.0))
    ok = unordered == 0 and checked > 250 and worst <= 1e-8
    acceptance_line(4, "NY ordering and degeneration to YV", ok,
                    f"{unordered}/{checked} unordered, worst |NY1-YV|/YV = {worst:.1e}")
    assert ok


def _spectral_bound(lam):
    l1, ln = float(np.max(lam)), float(np.min(lam))
    return ln, l1 + np.sqrt((l1 - ln) * (3 * l1 + ln) / 6.0)


def test_c05_spectral_bounds(acceptance_line):
    violations = 0
    steps = 0
    runs = 0
    for seed in range(5):
        rng = np.random.default_rng(seed)
        i = np.arange(100)
        cos_shape = 1.0 + (1e4 - 1.0) / 2 * (1 - np.cos(np.pi * i / 99))
        for p in (make_problem_3(100, kappa=1e4, seed=seed),
                  QuadraticProblem(cos_shape, np.zeros(100), rng.standard_normal(100))):
            rep = solve_ny(p, SolverConfig(record_trace=True))
            runs += rep.converged
            lo, hi = _spectral_bound(p.eigenvalues())
            inv = 1.0 / rep.stepsizes()
            steps += inv.size
            violations += int(np.sum((inv < lo * (1 - 1e-12)) | (inv > hi * (1 + 1e-12))))
    ok = violations == 0 and runs == 10
    acceptance_line(5, "reciprocal stepsizes within the spectral bounds", ok,
                    f"{violations} violations over {steps} steps, {runs}/10 converged")
    assert ok


def test_c06_asd_quadratic_exactness(acceptance_line):
    rng = np.random.default_rng(6)
    worst = 0.0
    for q in range(50):
        n = int(rng.integers(2, 51))
        p = random_spd_quadratic(n, kappa=10 ** rng.uniform(0, 4), seed=600 + q)
        obj = p.as_objective()
        x = rng.standard_normal(n)
        f, g = p.value(x), p.gradient(x)
        sd = cauchy_exact(g, p)
        for beta0 in 10 ** rng.uniform(-4, 2, 20):
            a = asd(obj, x, f, g, beta0).alpha
            worst = max(worst, abs(a - sd) / sd)
    ok = worst <= 1e-10
    acceptance_line(6, "ASD equals the Cauchy stepsize on quadratics", ok,
                    f"worst relative error {worst:.2e} over 1000 cases")
    assert ok


def _acceptance_violations(obj, rep, M, delta):
    f = [obj.value(obj.x0)] + [t.f for t in rep.trace]
    gn = [rep.gnorm0] + [t.gnorm for t in rep.trace]
    bad = 0
    for k, t in enumerate(rep.trace):
        f_ref = max(f[max(0, k - M):k + 1])
        bad += not f[k + 1] <= f_ref - delta * t.step * gn[k] ** 2
    return bad


def test_c07_improved_gll_hand_trace(acceptance_line):
    obj = Objective(lambda x: 0.5 * float(x @ x), lambda x: x.copy(), [1.0])
    res = improved_gll(obj, np.array([1.0]), np.array([1.0]), NonmonotoneMemory(0, 0.5),
                       10.0, delta=1e-4)
    trace_ok = res.step == 1.0 and res.extra_trials == 1 and obj.f_evals == 2
    bad = 0
    cfg = SolverConfig(record_trace=True)
    for name in ("broydn3d", "engval1", "dixmaanj", "cosine"):
        obj = get_problem(name, 300)
        rep = solve_any(obj, cfg)
        bad += _acceptance_violations(obj, rep, cfg.M, cfg.delta)
    ok = trace_ok and bad == 0
    acceptance_line(7, "improved GLL hand trace and acceptance inequality", ok,
                    f"lambda={res.step}, extra={res.extra_trials}, {bad} violated acceptances")
    assert ok


def test_c08_quadratic_iteration_counts(acceptance_line):
    out = {}
    for label, make, lo, hi in (("P2", make_problem_2, 11, 33), ("P3", make_problem_3, 115, 458)):
        its, slowest = [], 0.0
        for seed in range(5):
            p = make(10 ** 5, kappa=1e6, seed=seed)
            t0 = time.perf_counter()
            rep = solve_ny(p, SolverConfig(seed=seed))
            slowest = max(slowest, time.perf_counter() - t0)
            its.append(rep.iterations if rep.converged else np.inf)
        mean = float(np.mean(its))
        out[label] = (lo <= mean <= hi and slowest < 30.0, mean, slowest, lo, hi)
    ok = all(v[0] for v in out.values())
    detail = "; ".join(f"{k} mean {m:.1f} in [{lo}, {hi}]? {'yes' if o else 'no'}, "
                       f"slowest {s:.2f} s" for k, (o, m, s, lo, hi) in out.items())
    acceptance_line(8, "Problems 2 and 3 iteration counts at n=1e5", ok, detail)
    assert ok


def test_c09_line_search_economy(acceptance_line):
    specs = [ProblemSpec(name, 9999 if name == "dixmaanj" else 10 ** 4)
             for name in ("broydn3d", "cosine", "dixmaanj", "engval1", "trirose2")]
    rows = run_matrix(["any"], specs)
    summary = avg_ls_counts(rows)["any"]
    ok = summary.mean < 0.5
    per = ", ".join(f"{p[0]}={v:.3f}" for p, v in sorted(summary.per_problem.items()))
    acceptance_line(9, "ANY extra line-search trials per iteration < 0.5", ok,
                    f"mean {summary.mean:.3f}; {per}")
    assert ok


def test_c10_gradient_correctness(acceptance_line):
    worst = 0.0
    rng = np.random.default_rng(10)
    for name in GENERAL_NAMES:
        obj = get_problem(name, 30)
        points = [obj.x0] + [obj.x0 + 0.1 * rng.standard_normal(obj.n) for _ in range(10)]
        worst = max(worst, max(gradient_check(obj, x) for x in points))
    ok = worst <= 1e-6
    acceptance_line(10, "analytic gradients of Problems 4-9", ok,
                    f"worst relative error {worst:.2e}")
    assert ok


def test_c11_linear_decay(acceptance_line):
    p = random_spd_quadratic(100, kappa=1e4, seed=11)
    rep = solve_ny(p, SolverConfig(record_trace=True))
    g = np.array([rep.gnorm0] + [t.gnorm for t in rep.trace])
    slope = float(np.polyfit(np.arange(g.size), np.log(g), 1)[0])
    ok = slope < 0 and rep.converged
    acceptance_line(11, "least-squares slope of log|g_k| is negative", ok,
                    f"slope {slope:.3e} over {rep.iterations} iterations")
    assert ok

