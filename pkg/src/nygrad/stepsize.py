"""Stepsize rules for gradient methods.

Includes the Cauchy (steepest descent) step, the Barzilai-Borwein family,
ABBmin, the multipoint MPSG rule, Yuan's stepsize and its variant, and the
NY stepsizes obtained from three consecutive Cauchy steps.

Conventions: ``sd`` denotes a Cauchy (or approximated Cauchy) stepsize and
``g`` a gradient. All functions are pure.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .model import (
    DegenerateSubspace,
    InvalidCurvature,
    NonPositiveCurvature,
    NumericalFailure,
    QuadraticProblem,
    StepHistory,
    StepRecord,
)

GAMMA_TOL = 1e-12
P_TOL = 1e-10

Operator = Union[QuadraticProblem, np.ndarray, Callable[[np.ndarray], np.ndarray]]


def _apply(H: Operator, v: np.ndarray) -> np.ndarray:
    if isinstance(H, QuadraticProblem):
        return H.matvec(v)
    if callable(H):
        return H(v)
    H = np.asarray(H)
    return H * v if H.ndim == 1 else H @ v


def cauchy_exact(g, H: Operator) -> float:
    """Exact line-search stepsize ``g'g / g'Hg`` for a quadratic.

    ``H`` may be a dense matrix, a 1-D diagonal, a QuadraticProblem or a
    callable returning ``H @ v``.
    """
    g = np.asarray(g, dtype=np.float64)
    gg = float(g @ g)
    if gg == 0.0:
        raise ValueError("gradient is zero")
    gHg = float(g @ _apply(H, g))
    if not gHg > 0:
        raise NumericalFailure(f"g'Hg = {gHg!r} is not positive")
    return gg / gHg


def bb1(s, y) -> float:
    """Long Barzilai-Borwein stepsize ``s's / s'y``."""
    s, y = np.asarray(s, float), np.asarray(y, float)
    sy = float(s @ y)
    if not sy > 0:
        raise NonPositiveCurvature(f"s'y = {sy!r}")
    return float(s @ s) / sy


def bb2(s, y) -> float:
    """Short Barzilai-Borwein stepsize ``s'y / y'y``."""
    s, y = np.asarray(s, float), np.asarray(y, float)
    sy = float(s @ y)
    if not sy > 0:
        raise NonPositiveCurvature(f"s'y = {sy!r}")
    return sy / float(y @ y)


def _pairs(history: Union[StepHistory, Sequence[StepRecord]]) -> list[StepRecord]:
    if isinstance(history, StepHistory):
        return history.pairs()
    return [r for r in history if r.s is not None]


def abbmin(history, tau1: float = 0.8, m: int = 5, alpha_max: float = 1e5) -> float:
    """Adaptive BB stepsize taking the smallest recent BB2 value when BB2/BB1 < tau1.

    Pairs with nonpositive curvature contribute ``alpha_max`` in place of
    their BB values.
    """
    pairs = _pairs(history)
    if not pairs:
        raise ValueError("history holds no (s, y) pair")
    if not 0 < tau1 < 1:
        raise ValueError("tau1 must lie in (0, 1)")

    def safe_bb2(r: StepRecord) -> float:
        return r.sy / r.yy if r.sy > 0 else alpha_max

    last = pairs[-1]
    if not last.sy > 0:
        return alpha_max
    b1 = last.ss / last.sy
    b2 = last.sy / last.yy
    if b2 / b1 < tau1:
        return min(safe_bb2(r) for r in pairs[-(m + 1):])
    return b1


def _mdf(pairs: list[StepRecord]) -> tuple[float, float, float]:
    ss = sum(r.ss for r in pairs)
    asy = sum(abs(r.sy) for r in pairs)
    yy = sum(r.yy for r in pairs)
    if asy == 0.0:
        raise NumericalFailure("sum of |s'y| is zero")
    return ss, asy, yy


def mpsg(history, tau2: float = 0.9, m: int = 5) -> float:
    """Multipoint stepsize built from sums over the last ``m`` secant pairs.

    ``MDF1 = sum s's / sum |s'y|`` and ``MDF2 = sum |s'y| / sum y'y``. The
    ratio ``MDF2/MDF1`` is formed as ``(sum |s'y|)^2 / (sum s's * sum y'y)``
    so that collinear pairs give exactly 1.
    """
    pairs = _pairs(history)
    if not pairs:
        raise ValueError("history holds no (s, y) pair")
    if not 0 < tau2 < 1:
        raise ValueError("tau2 must lie in (0, 1)")
    ss, asy, yy = _mdf(pairs[-m:])
    mdf1 = ss / asy
    mdf2 = asy / yy
    if asy * asy / (ss * yy) < tau2:
        if len(pairs) > 1:
            _, asy_p, yy_p = _mdf(pairs[-m - 1:-1])
            return min(asy_p / yy_p, mdf2)
        return mdf2
    return mdf1


def _yuan_core(sd_prev: float, sd_cur: float, ratio_sq: float) -> float:
    a, c = 1.0 / sd_prev, 1.0 / sd_cur
    return 2.0 / (np.sqrt((a - c) ** 2 + 4.0 * ratio_sq) + a + c)


def yuan(sd_prev: float, sd_cur: float, gnorm_k: float, snorm_prev: float) -> float:
    """Yuan's stepsize from two consecutive Cauchy steps."""
    if not (sd_prev > 0 and sd_cur > 0 and snorm_prev > 0):
        raise ValueError("stepsizes and step norm must be positive")
    if gnorm_k < 0:
        raise ValueError("gradient norm must be nonnegative")
    return float(_yuan_core(sd_prev, sd_cur, (gnorm_k / snorm_prev) ** 2))


def yuan_variant(sd_prev: float, sd_cur: float, gnorm_k: float, gnorm_prev: float) -> float:
    """Yuan's stepsize with ``||s_{k-1}||`` replaced by ``sd_prev * ||g_{k-1}||``.

    The two agree whenever the previous step was an exact steepest descent
    step, and this form needs no stored step vector.
    """
    if not (sd_prev > 0 and sd_cur > 0 and gnorm_prev > 0):
        raise ValueError("stepsizes and previous gradient norm must be positive")
    if gnorm_k < 0:
        raise ValueError("gradient norm must be nonnegative")
    return float(_yuan_core(sd_prev, sd_cur, (gnorm_k / (sd_prev * gnorm_prev)) ** 2))


@dataclass(frozen=True)
class NyCoefficients:
    """Entries of the projected 3x3 matrix and its characteristic cubic.

    The cubic is ``mu^3 - t1 mu^2 + t2 mu - t3`` and ``p``, ``q`` are the
    coefficients of its depressed form.
    """

    beta: float
    gamma: float
    a33: float
    t1: float
    t2: float
    t3: float
    p: float
    q: float
    sd0: float
    sd1: float
    sd2: float


def ny_coefficients(sd0: float, sd1: float, sd2: float, g0, g1, g2,
                    gamma_tol: float = GAMMA_TOL) -> NyCoefficients:
    """Coefficients of the cubic whose roots are the reciprocal NY stepsizes.

    ``g0, g1, g2`` are three consecutive gradients and ``sd0, sd1, sd2`` the
    Cauchy stepsizes computed at them.
    """
    if not (sd0 > 0 and sd1 > 0 and sd2 > 0):
        raise ValueError("Cauchy stepsizes must be positive")
    g0, g1, g2 = (np.asarray(g, dtype=np.float64) for g in (g0, g1, g2))
    n0, n1, n2 = float(g0 @ g0), float(g1 @ g1), float(g2 @ g2)
    if n0 == 0 or n1 == 0 or n2 == 0:
        raise ValueError("gradients must be nonzero")
    beta = n2 / (sd1 * sd1 * n1)
    gamma = min(1.0, float(g2 @ g0) ** 2 / (n0 * n2))
    if 1.0 - gamma <= gamma_tol:
        raise DegenerateSubspace(f"1 - gamma = {1.0 - gamma:.3e}")
    r0, r1, r2 = 1.0 / sd0, 1.0 / sd1, 1.0 / sd2
    a33 = (r2 - gamma * r0) / (1.0 - gamma)
    if not a33 > 0:
        raise InvalidCurvature(f"a33 = {a33!r}")
    t1 = r0 + r1 + a33
    t2 = r0 * r1 + (r0 + r1) * a33 - beta
    t3 = a33 * r0 * r1 - beta * (1.0 - gamma) * r0 - a33 * beta * gamma
    p, q = _depressed(t1, t2, t3)
    return NyCoefficients(beta, gamma, a33, t1, t2, t3, p, q, sd0, sd1, sd2)


def _depressed(t1: float, t2: float, t3: float) -> tuple[float, float]:
    p = t2 - t1 * t1 / 3.0
    q = -2.0 * t1 ** 3 / 27.0 + t1 * t2 / 3.0 - t3
    return p, q


def cubic_roots_cardano(t1: float, t2: float, t3: float,
                        p_tol: float = P_TOL) -> tuple[float, float, float]:
    """Real roots of ``mu^3 - t1 mu^2 + t2 mu - t3`` in descending order.

    Assumes three real roots, as for the characteristic polynomial of a
    symmetric matrix, and uses the trigonometric form of Cardano's formula.
    """
    p, q = _depressed(t1, t2, t3)
    scale = max(1.0, t1 * t1)
    if p > -p_tol * scale:
        if p > p_tol * scale:
            raise NumericalFailure(f"complex roots: p = {p!r}")
        # p is zero up to roundoff, so the roots coincide unless q is large
        if abs(q) > 1e-8 * max(1.0, abs(t1)) ** 3:
            raise NumericalFailure(f"p ~ 0 with q = {q!r}")
        m = t1 / 3.0
        return m, m, m
    arg = 3.0 * q / (2.0 * p) * np.sqrt(-3.0 / p)
    phi = np.arccos(np.clip(arg, -1.0, 1.0)) / 3.0
    r = 2.0 * np.sqrt(-p / 3.0)
    shift = t1 / 3.0
    mu1 = shift + r * np.cos(phi)
    mu2 = shift + r * np.cos(phi - 2.0 * np.pi / 3.0)
    mu3 = shift + r * np.cos(phi - 4.0 * np.pi / 3.0)
    # phi in [0, pi/3] gives this order already; sort guards the clipped edges
    mu1, mu2, mu3 = sorted((float(mu1), float(mu2), float(mu3)), reverse=True)
    return mu1, mu2, mu3


def ny_stepsizes(c: NyCoefficients) -> tuple[float, float, float]:
    """The three NY stepsizes ``1/mu1 <= 1/mu2 <= 1/mu3``."""
    mu1, mu2, mu3 = cubic_roots_cardano(c.t1, c.t2, c.t3)
    if not mu3 > 0:
        raise InvalidCurvature(f"smallest root {mu3!r} is not positive")
    return 1.0 / mu1, 1.0 / mu2, 1.0 / mu3


def ny_stepsize(sd0: float, sd1: float, sd2: float, g0, g1, g2,
                gamma_tol: float = GAMMA_TOL) -> tuple[float, bool]:
    """Shortest NY stepsize, falling back to :func:`yuan_variant`.

    Returns ``(alpha, used_fallback)``. The fallback uses the last two
    Cauchy stepsizes, which is the limit of the NY stepsize as ``g2`` becomes
    parallel to ``g0``.
    """
    try:
        c = ny_coefficients(sd0, sd1, sd2, g0, g1, g2, gamma_tol)
        return ny_stepsizes(c)[0], False
    except NumericalFailure:
        gk = float(np.linalg.norm(g2))
        gp = float(np.linalg.norm(g1))
        return yuan_variant(sd1, sd2, gk, gp), True
