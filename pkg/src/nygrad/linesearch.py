"""Nonmonotone line searches and the approximated Cauchy stepsize."""
from __future__ import annotations

from collections import deque
from typing import NamedTuple

import numpy as np

from .model import LineSearchFailure, Objective


class NonmonotoneMemory:
    """The last ``M + 1`` accepted objective values; ``f_ref`` is their max."""

    def __init__(self, M: int, f0: float | None = None):
        if M < 0:
            raise ValueError("M must be nonnegative")
        self.M = M
        self._values: deque[float] = deque(maxlen=M + 1)
        if f0 is not None:
            self.push(f0)

    def push(self, f: float) -> None:
        self._values.append(float(f))

    @property
    def f_ref(self) -> float:
        if not self._values:
            raise ValueError("memory is empty")
        return max(self._values)

    @property
    def current(self) -> float:
        """Most recently pushed value, taken to be ``f(x_k)``."""
        if not self._values:
            raise ValueError("memory is empty")
        return self._values[-1]

    def __len__(self) -> int:
        return len(self._values)


class LineSearchResult(NamedTuple):
    step: float
    x: np.ndarray
    f: float
    extra_trials: int


def _accepts(f_new: float, f_ref: float, delta: float, alpha: float, gg: float) -> bool:
    return bool(np.isfinite(f_new)) and f_new <= f_ref - delta * alpha * gg


def improved_gll(obj: Objective, x, g, mem: NonmonotoneMemory, alpha0: float,
                 delta: float = 1e-4, L_max: int = 30) -> LineSearchResult:
    """GLL nonmonotone line search with quadratic-interpolation backtracking.

    A rejected trial ``alpha`` is replaced by the minimizer of the quadratic
    through ``f(x)``, the slope ``-||g||^2`` and ``f(x - alpha g)``, provided
    it lies in ``[0.1 alpha, 0.9 alpha]``; otherwise ``alpha`` is halved.
    The current ``f(x)`` is taken as the newest value in ``mem``.
    """
    if not alpha0 > 0:
        raise ValueError("alpha0 must be positive")
    x = np.asarray(x, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    gg = float(g @ g)
    f_ref = mem.f_ref
    f_cur = mem.current
    alpha = float(alpha0)
    for trial in range(L_max):
        x_new = x - alpha * g
        f_new = obj.value(x_new)
        if _accepts(f_new, f_ref, delta, alpha, gg):
            return LineSearchResult(alpha, x_new, f_new, trial)
        denom = 2.0 * (f_new - f_cur + alpha * gg)
        a_bar = gg * alpha * alpha / denom if denom > 0 and np.isfinite(denom) else -1.0
        if 0.1 * alpha <= a_bar <= 0.9 * alpha:
            alpha = a_bar
        else:
            alpha *= 0.5
    raise LineSearchFailure(f"no acceptable step after {L_max} trials")


def gll_backtrack(obj: Objective, x, g, mem: NonmonotoneMemory, alpha0: float,
                  delta: float = 1e-4, rho: float = 0.5,
                  L_max: int = 30) -> LineSearchResult:
    """Classical GLL search: first ``rho**p * alpha0`` passing the test."""
    if not alpha0 > 0:
        raise ValueError("alpha0 must be positive")
    if not 0 < rho < 1:
        raise ValueError("rho must lie in (0, 1)")
    x = np.asarray(x, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    gg = float(g @ g)
    f_ref = mem.f_ref
    alpha = float(alpha0)
    for trial in range(L_max):
        x_new = x - alpha * g
        f_new = obj.value(x_new)
        if _accepts(f_new, f_ref, delta, alpha, gg):
            return LineSearchResult(alpha, x_new, f_new, trial)
        alpha *= rho
    raise LineSearchFailure(f"no acceptable step after {L_max} trials")


_INFO_ULPS = 1e3


class ASDResult(NamedTuple):
    alpha: float
    f_evals: int
    degenerate: bool


def asd(obj: Objective, x, f: float, g, beta0: float, max_refine: int = 2,
        alpha_min: float = 1e-10, alpha_max: float = 1e5) -> ASDResult:
    """Approximate the Cauchy stepsize by quadratic interpolation.

    Fits ``phi(a) = f(x - a g)`` from ``phi(0)``, ``phi'(0) = -||g||^2`` and
    one sample ``phi(beta)``. When the fit has nonpositive curvature or its
    minimizer is outside ``(0, 10 beta]``, the sample point moves to the
    clamped minimizer (or ``10 beta``) and the fit is repeated, up to
    ``max_refine`` times. The last convex fit is returned; if every fit is
    concave the sample with the lowest ``phi`` is returned with
    ``degenerate=True``. The first sample point is
    raised if needed so that ``phi(beta) - phi(0)`` stays well above the
    rounding level of ``f``. Exact on quadratics.
    """
    if not beta0 > 0:
        raise ValueError("beta0 must be positive")
    x = np.asarray(x, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    gg = float(g @ g)
    if gg == 0:
        raise ValueError("gradient is zero")
    # below this the predicted decrease beta*||g||^2 drowns in the rounding of f
    beta_floor = _INFO_ULPS * np.finfo(float).eps * max(1.0, abs(f)) / gg
    beta = min(max(float(beta0), beta_floor), alpha_max)
    evals = 0
    best, best_phi = float(beta0), np.inf
    fit = None
    for _ in range(max_refine + 1):
        phi = obj.value(x - beta * g)
        evals += 1
        if not np.isfinite(phi):
            beta *= 0.1
            continue
        if phi < best_phi:
            best, best_phi = beta, phi
        denom = 2.0 * (phi - f + beta * gg)
        a_bar = gg * beta * beta / denom if denom > 0 else np.inf
        if np.isfinite(a_bar):
            fit = a_bar
        if 0 < a_bar <= 10.0 * beta:
            break
        beta = min(a_bar, 10.0 * beta)
    if fit is not None:
        return ASDResult(float(np.clip(fit, alpha_min, alpha_max)), evals, False)
    # no convex fit: phi falls at least linearly, so keep the best sample
    return ASDResult(float(np.clip(best, alpha_min, alpha_max)), evals, True)
