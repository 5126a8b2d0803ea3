"""Problem abstractions, solver configuration and run bookkeeping."""
from __future__ import annotations

import dataclasses
import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Iterator, Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray

Vector = NDArray[np.float64]

# Dense positive-definiteness is verified by eigensolve only up to this size.
_PD_CHECK_MAX_N = 50
DENSE_MAX_N = 1000


class NumericalFailure(ArithmeticError):
    """A stepsize or iterate could not be computed in floating point."""


class NonPositiveCurvature(NumericalFailure):
    """The secant pair has ``s @ y <= 0``."""


class DegenerateSubspace(NumericalFailure):
    """Three consecutive gradients span fewer than three dimensions."""


class InvalidCurvature(NumericalFailure):
    """A curvature estimate came out nonpositive."""


class LineSearchFailure(RuntimeError):
    """No acceptable stepsize was found within the trial budget."""


def as_vector(x: ArrayLike, n: Optional[int] = None, name: str = "x") -> Vector:
    """Convert ``x`` to a 1-D float64 array, optionally checking its length."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise ValueError(f"{name} has length {arr.shape[0]}, expected {n}")
    return arr


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class QuadraticProblem:
    """Strictly convex quadratic ``0.5 x'Hx + b'x`` with a starting point.

    ``hessian`` is either a 1-D array holding the diagonal of ``H`` or a
    dense symmetric ``(n, n)`` matrix (only for ``n <= 1000``). Arrays are
    copied and made read-only, so a problem can be shared between runs.
    """

    hessian: np.ndarray
    b: np.ndarray
    x0: np.ndarray
    name: str = "quadratic"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        h = np.asarray(self.hessian, dtype=np.float64)
        if h.ndim == 1:
            n = h.shape[0]
            if n == 0:
                raise ValueError("empty Hessian")
            if not np.all(np.isfinite(h)) or np.any(h <= 0):
                raise ValueError("diagonal Hessian must be finite and positive")
        elif h.ndim == 2:
            n = h.shape[0]
            if h.shape != (n, n) or n == 0:
                raise ValueError(f"dense Hessian must be square, got {h.shape}")
            if n > DENSE_MAX_N:
                raise ValueError(
                    f"dense storage is limited to n <= {DENSE_MAX_N}; "
                    "pass the diagonal spectrum instead"
                )
            if not np.array_equal(h, h.T):
                raise ValueError("dense Hessian is not symmetric")
            if n <= _PD_CHECK_MAX_N and np.linalg.eigvalsh(h)[0] <= 0:
                raise ValueError("Hessian is not positive definite")
        else:
            raise ValueError("hessian must be 1-D (diagonal) or 2-D (dense)")
        object.__setattr__(self, "hessian", _frozen(h))
        object.__setattr__(self, "b", _frozen(as_vector(self.b, n, "b")))
        object.__setattr__(self, "x0", _frozen(as_vector(self.x0, n, "x0")))
        object.__setattr__(self, "metadata", dict(self.metadata))

    @property
    def n(self) -> int:
        return self.hessian.shape[0]

    @property
    def is_diagonal(self) -> bool:
        return self.hessian.ndim == 1

    def matvec(self, v: Vector) -> Vector:
        if self.is_diagonal:
            return self.hessian * v
        return self.hessian @ v

    def eigenvalues(self) -> Vector:
        """Ascending spectrum of ``H``."""
        if self.is_diagonal:
            return np.sort(self.hessian)
        return np.linalg.eigvalsh(self.hessian)

    @property
    def kappa(self) -> float:
        lam = self.eigenvalues()
        return float(lam[-1] / lam[0])

    def value(self, x: ArrayLike) -> float:
        return quadratic_value_gradient(self, x)[0]

    def gradient(self, x: ArrayLike) -> Vector:
        x = as_vector(x, self.n)
        return self.matvec(x) + self.b

    def minimizer(self) -> Vector:
        if self.is_diagonal:
            return -self.b / self.hessian
        return np.linalg.solve(self.hessian, -self.b)

    def as_objective(self) -> "Objective":
        """Wrap as a general :class:`Objective` with fresh counters."""
        return Objective(
            self.value,
            self.gradient,
            self.x0,
            name=self.name,
            metadata={**self.metadata, "quadratic": True},
        )


def quadratic_value_gradient(p: QuadraticProblem, x: ArrayLike) -> tuple[float, Vector]:
    x = as_vector(x, p.n)
    g = p.matvec(x) + p.b
    # 0.5 x'Hx + b'x == 0.5 x'(g + b)
    f = 0.5 * float(x @ (g + p.b))
    return f, g


class Objective:
    """A differentiable objective with evaluation counters.

    The wrapped callables are treated as pure. Counters belong to this
    instance; solvers call :meth:`fresh` so that concurrent runs never share
    them.
    """

    def __init__(
        self,
        fun: Callable[[Vector], float],
        grad: Callable[[Vector], Vector],
        x0: ArrayLike,
        *,
        name: str = "objective",
        metadata: Optional[dict] = None,
    ):
        self._fun = fun
        self._grad = grad
        self.x0 = _frozen(as_vector(x0, name="x0"))
        self.name = name
        self.metadata = dict(metadata or {})
        self.f_evals = 0
        self.g_evals = 0

    @property
    def n(self) -> int:
        return self.x0.shape[0]

    def value(self, x: ArrayLike) -> float:
        x = as_vector(x, self.n)
        self.f_evals += 1
        return float(self._fun(x))

    def gradient(self, x: ArrayLike) -> Vector:
        x = as_vector(x, self.n)
        self.g_evals += 1
        g = np.asarray(self._grad(x), dtype=np.float64)
        if g.shape != (self.n,):
            raise ValueError(f"gradient has shape {g.shape}, expected ({self.n},)")
        return g

    def fresh(self) -> "Objective":
        return Objective(self._fun, self._grad, self.x0, name=self.name, metadata=self.metadata)

    def __repr__(self):
        return f"Objective(name={self.name!r}, n={self.n})"


def gradient_check(obj: Objective, x: ArrayLike, h: float = 1e-6) -> float:
    """Largest coordinate-wise relative error of the analytic gradient.

    Uses central differences; the error of coordinate ``i`` is
    ``|fd_i - g_i| / max(1, |g_i|)``.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    x = as_vector(x, obj.n)
    g = obj.gradient(x)
    worst = 0.0
    e = np.zeros_like(x)
    for i in range(x.shape[0]):
        e[i] = h
        fd = (obj.value(x + e) - obj.value(x - e)) / (2 * h)
        e[i] = 0.0
        worst = max(worst, abs(fd - g[i]) / max(1.0, abs(g[i])))
    return worst


@dataclass(frozen=True)
class SolverConfig:
    """Tunables shared by all solvers.

    Defaults for ``alpha_min``, ``alpha_max``, ``T`` and ``epsilon`` are the
    published settings; the line-search and BB-family values are
    conventional choices and are recorded in every :class:`RunReport`.
    """

    T: int = 7
    epsilon: float = 1e-6
    alpha_min: float = 1e-10
    alpha_max: float = 1e5
    M: int = 10
    delta: float = 1e-4
    L_max: int = 30
    max_iter: int = 20000
    tau1: float = 0.8
    tau2: float = 0.9
    bb_memory: int = 5
    rho: float = 0.5
    asd_max_refine: int = 2
    gamma_tol: float = 1e-12
    seed: int = 0
    record_trace: bool = False

    def __post_init__(self):
        if self.T < 3:
            raise ValueError("T must be at least 3")
        if not 0 < self.alpha_min < self.alpha_max:
            raise ValueError("need 0 < alpha_min < alpha_max")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.M < 0:
            raise ValueError("M must be nonnegative")
        if self.L_max < 1:
            raise ValueError("L_max must be at least 1")
        if self.max_iter < 0:
            raise ValueError("max_iter must be nonnegative")
        for name in ("tau1", "tau2", "rho"):
            if not 0 < getattr(self, name) < 1:
                raise ValueError(f"{name} must lie in (0, 1)")
        if self.bb_memory < 1:
            raise ValueError("bb_memory must be at least 1")
        if not 0 < self.gamma_tol < 1:
            raise ValueError("gamma_tol must lie in (0, 1)")
        if self.asd_max_refine < 0:
            raise ValueError("asd_max_refine must be nonnegative")

    def replace(self, **changes) -> "SolverConfig":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


@dataclass
class StepRecord:
    k: int
    x: Vector
    g: Vector
    f: float
    step: float = float("nan")  # accepted stepsize lambda_k, set once known
    sd: float = float("nan")  # Cauchy or approximated-Cauchy stepsize at x
    s: Optional[Vector] = None  # x_k - x_{k-1}
    y: Optional[Vector] = None  # g_k - g_{k-1}
    ss: float = float("nan")
    sy: float = float("nan")
    yy: float = float("nan")


class StepHistory:
    """Rolling window of recent iterates, gradients and stepsizes."""

    def __init__(self, capacity: int = 3):
        if capacity < 3:
            raise ValueError("capacity must be at least 3")
        self.capacity = capacity
        self._records: deque[StepRecord] = deque(maxlen=capacity)

    def push(self, k: int, x: Vector, g: Vector, f: float = float("nan"),
             sd: float = float("nan")) -> StepRecord:
        rec = StepRecord(k=k, x=x, g=g, f=f, sd=sd)
        if self._records:
            prev = self._records[-1]
            if k <= prev.k:
                raise ValueError("history indices must increase strictly")
            if k == prev.k + 1:
                rec.s = x - prev.x
                rec.y = g - prev.g
                rec.ss = float(rec.s @ rec.s)
                rec.sy = float(rec.s @ rec.y)
                rec.yy = float(rec.y @ rec.y)
        self._records.append(rec)
        return rec

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[StepRecord]:
        return iter(self._records)

    def __getitem__(self, i: int) -> StepRecord:
        return self._records[i]

    @property
    def last(self) -> StepRecord:
        return self._records[-1]

    def pairs(self) -> list[StepRecord]:
        """Records carrying a secant pair ``(s, y)``, oldest first."""
        return [r for r in self._records if r.s is not None]

    def clear(self) -> None:
        self._records.clear()


class Status(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_ITERATIONS = "MaxIterations"
    LINE_SEARCH_FAILURE = "LineSearchFailure"
    NUMERICAL_FAILURE = "NumericalFailure"

    def __str__(self) -> str:
        return self.value


class StepKind(str, enum.Enum):
    SD = "SD"
    ASD = "ASD"
    NY = "NY"
    ANY = "ANY"
    BB1 = "BB1"
    BB2 = "BB2"
    FIXED = "Fixed"
    YUAN = "Yuan"
    YV = "YV"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class IterationTrace:
    k: int
    f: float
    gnorm: float
    alpha: float
    kind: StepKind
    evals: int = 0  # extra function evaluations spent computing alpha
    step: float = float("nan")  # accepted stepsize after the line search


@dataclass
class RunReport:
    status: Status
    iterations: int
    f_evals: int
    g_evals: int
    ls_extra_trials: int
    final_gnorm: float
    gnorm0: float
    wall_time: float
    x: Vector
    solver: str = ""
    fallbacks: int = 0
    config: dict = field(default_factory=dict)
    trace: Optional[list[IterationTrace]] = None
    message: str = ""

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED

    def stepsizes(self) -> Vector:
        if self.trace is None:
            raise ValueError("run was made without record_trace=True")
        return np.array([t.alpha for t in self.trace])

    def kinds(self) -> list[StepKind]:
        if self.trace is None:
            raise ValueError("run was made without record_trace=True")
        return [t.kind for t in self.trace]
