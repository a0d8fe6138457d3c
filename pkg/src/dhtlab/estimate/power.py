"""Lower bounds on l^p operator norms by nonlinear power iteration."""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from ..operators import H, H0, I, K, R, OperatorKind, parse_operator
from . import kernels
from .windowed import WindowedOperator

__all__ = [
    "EstimateReport",
    "START_PROFILES",
    "DEFAULT_STARTS",
    "start_vector",
    "power_iterate",
    "doubling_study",
    "indicator_lower_bound",
    "indicator_ratio",
    "parseval_norm_check",
    "reference_norm",
    "run_estimates",
]

START_PROFILES = ("profile", "random", "powerlaw", "indicator")
DEFAULT_STARTS = START_PROFILES


@dataclass
class EstimateReport:
    op: str
    p: float
    N: int
    iters: int
    seed: int
    best_ratio: float
    sharp: float | None
    seconds: float
    start: str = ""
    backend: str = ""
    curve: list[tuple[int, float]] = field(default_factory=list, repr=False)
    best_x: np.ndarray | None = field(default=None, repr=False)

    @property
    def gap(self) -> float | None:
        return None if self.sharp is None else self.sharp - self.best_ratio

    def to_dict(self) -> dict:
        d = asdict(self)
        del d["curve"], d["best_x"]
        d["gap"] = self.gap
        order = ("op", "p", "N", "iters", "seed", "best_ratio", "sharp", "gap", "seconds", "start", "backend")
        return {k: d[k] for k in order}


def reference_norm(kind: OperatorKind, p: float) -> float | None:
    """Known value of ||op||_p, or None where it is not established."""
    from ..norms import is_covered, sharp_constant

    if kind == I:
        return 1.0
    if kind in (H, H0):
        return float(sharp_constant(p))
    if kind in (K, R) and is_covered(p):
        return float(sharp_constant(p))
    return None


def start_vector(name: str, N: int, p: float, rng: np.random.Generator) -> np.ndarray:
    n = np.arange(-N, N + 1, dtype=np.float64)
    if name == "profile":
        return np.sign(np.sin((n + 0.5) * np.pi / 2)) * (1 + np.abs(n)) ** (-1 / p)
    if name == "powerlaw":
        return np.sign(n + 0.5) * np.abs(n + 0.5) ** (-1 / p)
    if name == "random":
        return rng.standard_normal(n.size)
    if name == "indicator":
        return np.ones(n.size)
    raise ValueError(f"unknown start {name!r}")


def _run(w, wt, p, q, x, iters, method):
    """One power-iteration run; returns (best ratio, best x, ratio per iteration)."""
    lp = kernels.lp_norm
    x = x / lp(x, p)
    best, best_x, trace = -1.0, x, []
    for _ in range(iters):
        y = w.apply(x, method)
        r = lp(y, p)  # ||x||_p == 1
        trace.append(r)
        if r > best:
            best, best_x = r, x
        if r == 0.0:
            break
        z = wt.apply(kernels.duality_map(y / r, p), method)
        x = kernels.duality_map(z, q)
        nx = lp(x, p)
        if nx == 0.0 or not math.isfinite(nx):
            break
        x = x / nx
    return best, best_x, trace


def _refined_ratio(w: WindowedOperator, x: np.ndarray, p: float) -> float:
    y = w.apply_compensated(x)

    def norm(v):
        m = np.max(np.abs(v))
        if m == 0:
            return 0.0
        return m * math.fsum((np.abs(v) / m) ** p) ** (1 / p)

    return norm(y) / norm(x)


def power_iterate(
    w: WindowedOperator,
    p: float,
    iters: int = 200,
    seed: int = 0,
    *,
    starts=DEFAULT_STARTS,
    x0: np.ndarray | None = None,
    method: str = "fft",
    refine: bool = True,
    kind: OperatorKind | None = None,
) -> EstimateReport:
    """Best ``||W x||_p / ||x||_p`` seen over iterations of x <- J_q(W^T J_p(W x)).

    Each named start (and ``x0`` if given) is iterated ``iters`` times.  The
    curve records the best-so-far ratio after each iteration, across runs in
    order, so it is nondecreasing.  With ``refine`` the winning vector's
    ratio is recomputed with compensated summation.
    """
    if not p > 1:
        raise ValueError("p must exceed 1")
    if iters < 1:
        raise ValueError("iters must be positive")
    t0 = time.perf_counter()
    q = p / (p - 1)
    wt = w.adjoint()
    rng = np.random.default_rng(seed)
    runs = [(s, start_vector(s, w.N, p, rng)) for s in starts]
    if x0 is not None:
        x0 = np.asarray(x0, dtype=np.float64)
        if x0.shape != (w.size,):
            raise ValueError("warm start has the wrong length")
        runs.insert(0, ("warm", x0))
    best, best_x, best_start = -1.0, None, ""
    curve: list[tuple[int, float]] = []
    running = -1.0
    for name, x in runs:
        if not np.any(x):
            continue
        r, bx, trace = _run(w, wt, p, q, x, iters, method)
        for v in trace:
            running = max(running, v)
            curve.append((len(curve) + 1, running))
        if r > best:
            best, best_x, best_start = r, bx, name
    ratio = best
    if refine and best_x is not None:
        ratio = _refined_ratio(w, best_x, p)
    sharp = reference_norm(kind, p) if kind is not None else None
    return EstimateReport(
        op=str(kind) if kind is not None else w.name,
        p=p,
        N=w.N,
        iters=iters,
        seed=seed,
        best_ratio=float(ratio),
        sharp=sharp,
        seconds=time.perf_counter() - t0,
        start=best_start,
        backend="numba" if kernels.USE_NUMBA else "numpy",
        curve=curve,
        best_x=best_x,
    )


def _embed(x: np.ndarray, N: int) -> np.ndarray:
    M = (x.size - 1) // 2
    out = np.zeros(2 * N + 1)
    out[N - M : N + M + 1] = x
    return out


def doubling_study(
    kind: OperatorKind,
    p: float,
    N0: int,
    levels: int,
    iters: int = 200,
    seed: int = 0,
    *,
    starts=DEFAULT_STARTS,
) -> list[EstimateReport]:
    """Runs at N0, 2 N0, 4 N0, ...; each level is warm-started from the last.

    The zero-padded previous optimiser is a valid input at the next level,
    so the reported ratios are nondecreasing in N.
    """
    reports: list[EstimateReport] = []
    x0 = None
    for i in range(levels):
        N = N0 * 2**i
        w = WindowedOperator.from_kind(kind, N)
        warm = None if x0 is None else _embed(x0, N)
        rep = power_iterate(w, p, iters, seed, starts=starts, x0=warm, kind=kind)
        reports.append(rep)
        x0 = rep.best_x
    return reports


def indicator_lower_bound(p: float, N: int, k: int, op: OperatorKind = I) -> float:
    """(2N+1-2k)/(2N+1) * (4/pi^2) * sum over odd |m| <= k of 1/m^2.

    Independent of p as written; ``indicator_ratio`` gives the value the
    indicator of [-N, N] actually attains.
    """
    if op != I:
        raise ValueError("the indicator bound is for I only")
    if not 0 <= k < N:
        raise ValueError(f"need 0 <= k < N, got k={k}, N={N}")
    s = math.fsum(2.0 / (m * m) for m in range(1, k + 1, 2))
    return (2 * N + 1 - 2 * k) / (2 * N + 1) * 4 / math.pi**2 * s


def indicator_ratio(p: float, N: int) -> float:
    """||P_N I 1_N||_p / ||1_N||_p for the indicator of [-N, N]."""
    w = WindowedOperator.from_kind(I, N)
    x = np.ones(w.size)
    return kernels.lp_norm(w.apply(x), p) / kernels.lp_norm(x, p)


def parseval_norm_check(kind: OperatorKind, N: int, trials: int = 50, seed: int = 0) -> float:
    """Largest ``||W x||_2 / ||x||_2`` over random Gaussian windows."""
    w = WindowedOperator.from_kind(kind, N)
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(trials):
        x = rng.standard_normal(w.size)
        nx = np.linalg.norm(x)
        if nx == 0:
            continue
        best = max(best, float(np.linalg.norm(w.apply(x)) / nx))
    return best


def _one(cfg: dict) -> EstimateReport:
    kind = parse_operator(cfg["op"])
    w = WindowedOperator.from_kind(kind, cfg["N"])
    return power_iterate(
        w, cfg["p"], cfg.get("iters", 200), cfg.get("seed", 0),
        starts=cfg.get("starts", DEFAULT_STARTS), kind=kind,
    )


def run_estimates(configs: list[dict], jobs: int = 1) -> list[EstimateReport]:
    """Independent runs, in a process pool when ``jobs > 1``; output keeps input order."""
    if jobs <= 1 or len(configs) <= 1:
        return [_one(c) for c in configs]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_one, configs))
