"""Test problems: three diagonal quadratics, six smooth unconstrained
functions with analytic gradients, and a random SPD quadratic factory.

Chained functions treat out-of-range entries (``x_0``, ``x_{n+1}``, ...)
as zero unless the formula states its own boundary terms.
"""
from __future__ import annotations

from typing import Callable, Union

import numpy as np

from .model import Objective, QuadraticProblem

DEFAULT_KAPPA = 1e6


def _unit_sphere(n: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)


def _diag_problem(lam, b, x0, name, **meta) -> QuadraticProblem:
    lam = np.asarray(lam, dtype=np.float64)
    meta["kappa"] = float(lam.max() / lam.min())
    return QuadraticProblem(lam, b, x0, name=name, metadata=meta)


def make_problem_1(n: int) -> QuadraticProblem:
    """Spectrum ``(0.1, 2, 3, ..., n)``, ``b = 1``, ``x0 = 0``."""
    if n < 2:
        raise ValueError("n must be at least 2")
    lam = np.arange(1, n + 1, dtype=np.float64)
    lam[0] = 0.1
    return _diag_problem(lam, np.ones(n), np.zeros(n), "problem1")


def make_problem_2(n: int, kappa: float = DEFAULT_KAPPA, seed: int = 0) -> QuadraticProblem:
    """Half the eigenvalues in ``[1, 1 + 0.2(kappa-1)]``, half in ``[0.8 kappa, kappa]``.

    Eigenvalues are uniform within each band; ``b = 0`` and ``x0`` is a
    random point on the unit sphere.
    """
    if n < 2 or n % 2:
        raise ValueError("n must be even and at least 2")
    if kappa < 1:
        raise ValueError("kappa must be at least 1")
    rng = np.random.default_rng(seed)
    half = n // 2
    lam = np.concatenate([
        rng.uniform(1.0, 1.0 + 0.2 * (kappa - 1.0), half),
        rng.uniform(0.8 * kappa, kappa, n - half),
    ])
    x0 = _unit_sphere(n, rng)
    return _diag_problem(lam, np.zeros(n), x0, "problem2", seed=seed, kappa_param=kappa)


def make_problem_3(n: int, kappa: float = DEFAULT_KAPPA, seed: int = 0) -> QuadraticProblem:
    """Cosine-spaced spectrum ``kappa/2 (cos((n-i)/(n-1) pi) + 1)``, ``b = 0``.

    The formula gives 0 at ``i = 1`` and values far below 1 near it, so
    every eigenvalue is clipped to at least ``kappa * 1e-6``; the floor is
    recorded in the metadata.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if kappa < 1:
        raise ValueError("kappa must be at least 1")
    i = np.arange(1, n + 1, dtype=np.float64)
    raw = kappa / 2.0 * (np.cos((n - i) / (n - 1) * np.pi) + 1.0)
    floor = kappa * 1e-6
    lam = np.maximum(raw, floor)
    x0 = _unit_sphere(n, np.random.default_rng(seed))
    return _diag_problem(lam, np.zeros(n), x0, "problem3", seed=seed, kappa_param=kappa,
                         lambda_floor=floor, clipped=int(np.sum(raw < floor)))


def random_spd_quadratic(n: int, kappa: float = 1e4, seed: int = 0) -> QuadraticProblem:
    """Random quadratic with log-uniform spectrum in ``[1, kappa]``.

    The Hessian is conjugated by a random orthogonal matrix when ``n <= 50`` and
    kept diagonal otherwise. ``b`` and ``x0`` are standard normal.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if kappa < 1:
        raise ValueError("kappa must be at least 1")
    rng = np.random.default_rng(seed)
    lam = np.exp(rng.uniform(0.0, np.log(kappa), n))
    b = rng.standard_normal(n)
    x0 = rng.standard_normal(n)
    meta = {"seed": seed, "kappa": float(lam.max() / lam.min()), "spectrum": np.sort(lam)}
    if n > 50:
        return QuadraticProblem(lam, b, x0, name="random_spd", metadata=meta)
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    H = (Q * lam) @ Q.T
    H = 0.5 * (H + H.T)
    return QuadraticProblem(H, b, x0, name="random_spd", metadata=meta)


def _check_n(n: int, minimum: int = 4):
    if n < minimum:
        raise ValueError(f"n must be at least {minimum}")


def _pad(x: np.ndarray, k: int) -> np.ndarray:
    return np.concatenate([np.zeros(k), x, np.zeros(k)])


def broydn3d(n: int) -> Objective:
    """BROYDN3D: sum of squared residuals ``(3 - 2x_i)x_i - x_{i-1} - 2x_{i+1} + 1``."""
    _check_n(n)

    def residual(x):
        xp = _pad(x, 1)
        return (3 - 2 * x) * x - xp[:-2] - 2 * xp[2:] + 1

    def fun(x):
        r = residual(x)
        return float(r @ r)

    def grad(x):
        r = residual(x)
        g = 2 * r * (3 - 4 * x)
        g[1:] -= 2 * r[:-1] * 2  # r_{i-1} contains -2 x_i
        g[:-1] -= 2 * r[1:]  # r_{i+1} contains -x_i
        return g

    return Objective(fun, grad, -np.ones(n), name="broydn3d",
                     metadata={"boundary": "zero"})


def cosine(n: int) -> Objective:
    """COSINE: ``sum cos(x_i^2 - 0.5 x_{i+1})``."""
    _check_n(n)

    def fun(x):
        return float(np.sum(np.cos(x[:-1] ** 2 - 0.5 * x[1:])))

    def grad(x):
        s = np.sin(x[:-1] ** 2 - 0.5 * x[1:])
        g = np.zeros_like(x)
        g[:-1] -= 2 * x[:-1] * s
        g[1:] += 0.5 * s
        return g

    return Objective(fun, grad, np.ones(n), name="cosine")


def dixmaanj(n: int, alpha: float = 1.0, beta: float = 0.0625,
             gamma: float = 0.0625, delta: float = 0.0625) -> Objective:
    """DIXMAANJ with ``m = n/3`` and quadratic index weights ``(i/n)^2``."""
    _check_n(n, 6)
    if n % 3:
        raise ValueError("n must be divisible by 3")
    m = n // 3
    w = (np.arange(1, n + 1) / n) ** 2

    def fun(x):
        xa, xb = x[:-1], x[1:]
        t1 = alpha * np.sum(w * x * x)
        t2 = beta * np.sum(xa ** 2 * (xb + xb ** 2) ** 2)
        t3 = gamma * np.sum(x[:2 * m] ** 2 * x[m:3 * m] ** 4)
        t4 = delta * np.sum(w[:m] * x[:m] * x[2 * m:3 * m])
        return float(1.0 + t1 + t2 + t3 + t4)

    def grad(x):
        g = 2 * alpha * w * x
        xa, xb = x[:-1], x[1:]
        u = xb + xb ** 2
        g[:-1] += beta * 2 * xa * u ** 2
        g[1:] += beta * xa ** 2 * 2 * u * (1 + 2 * xb)
        xl, xh = x[:2 * m], x[m:3 * m]
        g[:2 * m] += gamma * 2 * xl * xh ** 4
        g[m:3 * m] += gamma * 4 * xl ** 2 * xh ** 3
        g[:m] += delta * w[:m] * x[2 * m:3 * m]
        g[2 * m:3 * m] += delta * w[:m] * x[:m]
        return g

    return Objective(fun, grad, 2 * np.ones(n), name="dixmaanj",
                     metadata={"m": m, "alpha": alpha, "beta": beta,
                               "gamma": gamma, "delta": delta})


def engval1(n: int) -> Objective:
    """ENGVAL1: ``sum (x_i^2 + x_{i+1}^2)^2 - 4 x_i + 3``."""
    _check_n(n)

    def fun(x):
        q = x[:-1] ** 2 + x[1:] ** 2
        return float(np.sum(q * q - 4 * x[:-1] + 3))

    def grad(x):
        q = x[:-1] ** 2 + x[1:] ** 2
        g = np.zeros_like(x)
        g[:-1] += 4 * q * x[:-1] - 4
        g[1:] += 4 * q * x[1:]
        return g

    return Objective(fun, grad, 2 * np.ones(n), name="engval1")


def firose(n: int) -> Objective:
    """FIROSE: sum of squares of the chained five-point residual.

    Only the interior residual is known, so every residual uses it with
    out-of-range entries set to zero.
    """
    _check_n(n)

    def parts(x):
        xp = _pad(x, 2)
        xm2, xm1, xq1, xq2 = xp[:-4], xp[1:-3], xp[3:-1], xp[4:]
        F = (8 * x * (x * x - xm1) - 2 * (1 - x) + 4 * (x - xq1 ** 2)
             + xm1 ** 2 - xm2 + xq1 - xq2 ** 2)
        return F, x, xm1, xq1, xq2

    def fun(x):
        F = parts(x)[0]
        return float(F @ F)

    def grad(x):
        F, x, xm1, xq1, xq2 = parts(x)
        acc = np.zeros(n + 4)  # acc[j + 2] holds d f / d x_j
        c = 2 * F
        acc[2:-2] += c * (24 * x * x - 8 * xm1 + 6)
        acc[1:-3] += c * (-8 * x + 2 * xm1)
        acc[:-4] -= c
        acc[3:-1] += c * (1 - 8 * xq1)
        acc[4:] += c * (-2 * xq2)
        return acc[2:-2]

    return Objective(fun, grad, -np.ones(n), name="firose",
                     metadata={"boundary": "zero", "reconstructed": True})


def trirose2(n: int) -> Objective:
    """TRIROSE2: chained Rosenbrock-type residuals with explicit end terms."""
    _check_n(n)

    def residuals(x):
        xi, xm, xq = x[1:-1], x[:-2], x[2:]
        r = 8 * xi * (xi * xi - xm) - 2 * (1 - xi) + 4 * (xi - xq * xq)
        rn = 8 * x[-1] * (x[-1] ** 2 - x[-2]) - 2 * (1 - x[-1])
        r0 = x[0] - x[1] ** 2
        return r0, r, rn

    def fun(x):
        r0, r, rn = residuals(x)
        return float(16 * r0 * r0 + r @ r + rn * rn)

    def grad(x):
        r0, r, rn = residuals(x)
        g = np.zeros_like(x)
        g[0] += 32 * r0
        g[1] += 32 * r0 * (-2 * x[1])
        xi, xq = x[1:-1], x[2:]
        c = 2 * r
        g[1:-1] += c * (24 * xi * xi - 8 * x[:-2] + 6)
        g[:-2] += c * (-8 * xi)
        g[2:] += c * (-8 * xq)
        g[-1] += 2 * rn * (24 * x[-1] ** 2 - 8 * x[-2] + 2)
        g[-2] += 2 * rn * (-8 * x[-1])
        return g

    return Objective(fun, grad, -np.ones(n), name="trirose2")


Factory = Callable[..., Union[QuadraticProblem, Objective]]

REGISTRY: dict[str, Factory] = {
    "problem1": lambda n, kappa=DEFAULT_KAPPA, seed=0: make_problem_1(n),
    "problem2": lambda n, kappa=DEFAULT_KAPPA, seed=0: make_problem_2(n, kappa, seed),
    "problem3": lambda n, kappa=DEFAULT_KAPPA, seed=0: make_problem_3(n, kappa, seed),
    "broydn3d": lambda n, kappa=None, seed=0: broydn3d(n),
    "cosine": lambda n, kappa=None, seed=0: cosine(n),
    "dixmaanj": lambda n, kappa=None, seed=0: dixmaanj(n),
    "engval1": lambda n, kappa=None, seed=0: engval1(n),
    "firose": lambda n, kappa=None, seed=0: firose(n),
    "trirose2": lambda n, kappa=None, seed=0: trirose2(n),
}

QUADRATIC_NAMES = ("problem1", "problem2", "problem3")
GENERAL_NAMES = ("broydn3d", "cosine", "dixmaanj", "engval1", "firose", "trirose2")


def get_problem(name: str, n: int, kappa: float = DEFAULT_KAPPA,
                seed: int = 0) -> Union[QuadraticProblem, Objective]:
    """Build a registered problem by name."""
    try:
        factory = REGISTRY[name.lower()]
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(REGISTRY)}") from None
    return factory(n, kappa=kappa, seed=seed)
