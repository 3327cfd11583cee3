from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

XTOL = "XTol"
MAX_EVALS = "MaxEvals"
MAX_TIME = "MaxTime"


@dataclass
class OptOptions:
    """Stopping rules and optional box for the optimizers.

    ``bounds`` is ``(lo, hi)``; each side is a scalar or a per-coordinate
    sequence. ``m_points`` only matters for the quadratic model (``None``
    means ``2n + 1``). ``initial_step`` overrides each method's default
    starting scale.
    """
    xtol_abs: float = 1e-16
    max_evals: int = 1000
    max_time: float = math.inf
    bounds: tuple | None = None
    m_points: int | None = None
    initial_step: float | None = None

    def __post_init__(self):
        if not self.xtol_abs > 0:
            raise ValueError(f"xtol_abs must be positive, got {self.xtol_abs}")
        if self.max_evals < 1:
            raise ValueError(f"empty evaluation budget (max_evals={self.max_evals})")
        if not self.max_time > 0:
            raise ValueError(f"empty time budget (max_time={self.max_time})")

    def box(self, n: int) -> tuple[np.ndarray, np.ndarray] | None:
        if self.bounds is None:
            return None
        lo, hi = self.bounds
        lo = np.broadcast_to(np.asarray(lo, dtype=np.float64), (n,)).copy()
        hi = np.broadcast_to(np.asarray(hi, dtype=np.float64), (n,)).copy()
        if np.any(lo > hi):
            raise ValueError(f"lower bound exceeds upper bound: {lo} > {hi}")
        return lo, hi

    def m_for(self, n: int) -> int:
        m = 2 * n + 1 if self.m_points is None else int(self.m_points)
        if not n + 2 <= m <= (n + 1) * (n + 2) // 2:
            raise ValueError(
                f"m_points={m} outside [{n + 2}, {(n + 1) * (n + 2) // 2}] for n={n}")
        return m


@dataclass
class OptResult:
    x_best: np.ndarray
    f_best: float
    neval: int
    elapsed: float
    termination: str
    trace: list[tuple[int, float]] = field(default_factory=list)
    algorithm: str = ""

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "x_best": [float(v) for v in self.x_best],
            "f_best": self.f_best,
            "neval": self.neval,
            "elapsed": self.elapsed,
            "termination": self.termination,
        }


class BudgetExhausted(Exception):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class Tracker:
    """Wraps the objective: budget checks, incumbent, trace.

    Non-finite values are stored as ``+inf`` so they never become the
    incumbent.
    """

    def __init__(self, f: Callable[[np.ndarray], float], opts: OptOptions):
        self.f = f
        self.opts = opts
        self.neval = 0
        self.x_best: np.ndarray | None = None
        self.f_best = math.inf
        self.trace: list[tuple[int, float]] = []
        self.t0 = time.perf_counter()

    @property
    def elapsed(self) -> float:
        return time.perf_counter() - self.t0

    def __call__(self, x: np.ndarray) -> float:
        if self.neval >= self.opts.max_evals:
            raise BudgetExhausted(MAX_EVALS)
        if self.elapsed >= self.opts.max_time:
            raise BudgetExhausted(MAX_TIME)
        x = np.array(x, dtype=np.float64)
        self.neval += 1
        fx = float(self.f(x.copy()))
        if not math.isfinite(fx):
            fx = math.inf
        if fx < self.f_best or self.x_best is None:
            self.f_best = fx
            self.x_best = x
        self.trace.append((self.neval, self.f_best))
        return fx

    def result(self, termination: str, algorithm: str) -> OptResult:
        return OptResult(np.array(self.x_best), self.f_best, self.neval, self.elapsed,
                         termination, self.trace, algorithm)


def start(f, x0: Sequence[float], opts: OptOptions) -> tuple[Tracker, np.ndarray, float]:
    """Validate ``x0`` (clipped into the box), evaluate it first, return the tracker."""
    x0 = np.array(x0, dtype=np.float64).ravel()
    if x0.size < 1:
        raise ValueError("dimension must be at least 1")
    box = opts.box(x0.size)
    if box is not None:
        x0 = np.clip(x0, *box)
    tracker = Tracker(f, opts)
    f0 = tracker(x0)
    if not math.isfinite(f0):
        raise ValueError(f"objective is not finite at the starting point {x0}")
    return tracker, x0, f0
