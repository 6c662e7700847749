"""Closed-form constants, existence probabilities, phase grids and cost thresholds."""

from __future__ import annotations

import io
import math
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import bisect, brentq, minimize_scalar

from .batch import CLASS_NAMES, classify_many
from .core import COLOCATION_TOL, ArityError, CostModel
from .solver import solve_duopoly
from .streams import uniforms

# Draws classified per task; also the unit of parallel work.
CHUNK = 1 << 16


def _positive(c: float, name: str = "c"):
    if not c > 0:
        raise ValueError(f"{name} must be positive, got {c!r}")


def existence_probability_duopoly(c: float) -> float:
    """Probability that a duopoly with uniform references has an equilibrium."""
    _positive(c)
    c = float(c)
    return min(1.0, 1.0 - ((2.0 + 4.0 * c) ** 1.5 - 6.0 * c - 5.0) / (6.0 * c * c))


def theta_constant() -> float:
    """Cost at which the duopoly existence probability is smallest."""
    s = math.sqrt(26.0)
    return (3.0 * np.cbrt(4.0 * s + 73.0) + np.cbrt(1971.0 - 108.0 * s) - 9.0) / 12.0


def minimize_existence_probability(lo: float = 0.5, hi: float = 5.0) -> float:
    """Numeric argmin of the duopoly existence probability on ``[lo, hi]``.

    A bounded Brent search brackets the minimum; the stationary point is then
    refined by a root search on the derivative's numerator, which keeps full
    precision where the probability itself is flat.
    """
    coarse = minimize_scalar(existence_probability_duopoly, bounds=(lo, hi), method="bounded",
                             options={"xatol": 1e-6}).x

    # Sign of dP/dc, up to a positive factor.
    def slope(c):
        s = math.sqrt(2.0 + 4.0 * c)
        return (2.0 * c + 4.0) * s - 6.0 * c - 10.0

    a, b = max(lo, coarse - 1e-3), min(hi, coarse + 1e-3)
    if slope(a) * slope(b) > 0:
        return coarse
    return brentq(slope, a, b, xtol=1e-15, rtol=8.9e-16)


def eta_quartic(c: float) -> float:
    return 36.0 * c ** 4 + 8.0 * c ** 3 - 36.0 * c ** 2 - 24.0 * c - 4.0


def eta_constant() -> float:
    """Cost above which the differentiated equilibrium is the likelier one."""
    return bisect(eta_quartic, 1.0, 2.0, xtol=1e-15, rtol=8.9e-16, maxiter=200)


def undifferentiated_probability_duopoly(c: float) -> float:
    """Probability that both players meet at 1/2, clamped to 1 for c < 1/2."""
    _positive(c)
    return min(1.0, 1.0 / (4.0 * float(c) ** 2))


def symmetric_triopoly_phi(c: float) -> float:
    """Largest ``r1`` for which ``(r1, 1/2, 1 - r1)`` has an equilibrium (may be negative)."""
    _positive(c)
    c = float(c)
    return (3.0 + 2.0 * c - 2.0 * math.sqrt(4.0 + 2.0 * c)) / (4.0 * c)


def regular_threshold(n: int) -> float:
    """Cost above which evenly spaced references ``k/(n+1)`` admit an equilibrium."""
    if int(n) != n or n < 5:
        raise ValueError(f"regular threshold needs an integer n >= 5, got {n!r}")
    return (1.0 + math.sqrt(6.0)) * (n + 1) / 4.0


@dataclass(frozen=True)
class ProbabilityEstimate:
    p_hat: float
    stderr: float
    draws: int
    seed: int
    hits: int = 0


_WORKER_COST: Optional[CostModel] = None


def _init_worker(cost):
    global _WORKER_COST
    _WORKER_COST = cost


def _count_chunk(args):
    n, seed, start, stop = args
    R = uniforms(seed, start, stop, n)
    return int(np.count_nonzero(classify_many(R, _WORKER_COST)))


def monte_carlo_existence(n: int, cost: CostModel, draws: int, seed: int = 0,
                          workers: int = 1) -> ProbabilityEstimate:
    """Share of uniform reference vectors whose game has an equilibrium.

    Draw ``k`` uses its own counter-based stream, so the estimate depends
    only on ``(n, cost, draws, seed)`` and never on ``workers``.
    """
    if int(draws) != draws or draws < 1:
        raise ValueError(f"draws must be a positive integer, got {draws!r}")
    if n < 1:
        raise ArityError("n must be at least 1")
    cost.check_arity(n)
    tasks = [(n, seed, s, min(s + CHUNK, draws)) for s in range(0, draws, CHUNK)]
    if workers <= 1 or len(tasks) == 1:
        _init_worker(cost)
        hits = sum(map(_count_chunk, tasks))
    else:
        # Fork so arbitrary (unpicklable) cost callables reach the workers.
        ctx = multiprocessing.get_context("fork")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx,
                                 initializer=_init_worker, initargs=(cost,)) as pool:
            hits = sum(pool.map(_count_chunk, tasks))
    p = hits / draws
    return ProbabilityEstimate(p, math.sqrt(p * (1.0 - p) / draws), int(draws), int(seed), hits)


@dataclass
class PhaseGrid:
    """Existence classes on a square grid of two free references.

    ``cells[a, b]`` is the class code at ``r[axes[0]] = centers[a]`` and
    ``r[axes[1]] = centers[b]``; see :data:`locgame.batch.CLASS_NAMES`.
    """

    n: int
    axes: tuple
    fixed: dict
    resolution: int
    cells: np.ndarray = field(repr=False)

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.resolution) + 0.5) / self.resolution

    def counts(self) -> dict:
        return {name: int(np.count_nonzero(self.cells == code)) for code, name in CLASS_NAMES.items()}

    def to_csv(self) -> str:
        buf = io.StringIO(newline="")
        buf.write("r_axis1,r_axis2,class\n")
        cs = [format(float(v), ".17g") for v in self.centers]
        for a in range(self.resolution):
            for b in range(self.resolution):
                buf.write(f"{cs[a]},{cs[b]},{CLASS_NAMES[int(self.cells[a, b])]}\n")
        return buf.getvalue()


def phase_grid(n: int, cost: CostModel, resolution: int, axes: Sequence[int] = (0, 1),
               fixed: Optional[dict] = None) -> PhaseGrid:
    """Classify every cell center of the plane spanned by two references.

    Args:
        n: number of players.
        cost: cost model.
        resolution: cells per axis.
        axes: zero-based indices of the two varying references.
        fixed: zero-based index -> value for every other reference.
    """
    fixed = dict(fixed or {})
    axes = tuple(int(a) for a in axes)
    if resolution < 1:
        raise ValueError("resolution must be positive")
    if len(axes) != 2 or axes[0] == axes[1]:
        raise ArityError("exactly two distinct varying axes are required")
    if any(not 0 <= k < n for k in (*axes, *fixed)):
        raise ArityError(f"axis index out of range for {n} players")
    if set(axes) & set(fixed) or set(axes) | set(fixed) != set(range(n)):
        raise ArityError("every reference must be either varying or fixed, not both")
    cost.check_arity(n)
    centers = (np.arange(resolution) + 0.5) / resolution
    A, B = np.meshgrid(centers, centers, indexing="ij")
    R = np.empty((resolution * resolution, n))
    R[:, axes[0]] = A.ravel()
    R[:, axes[1]] = B.ravel()
    for k, v in fixed.items():
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"fixed reference {v!r} outside [0, 1]")
        R[:, k] = v
    cells = np.concatenate([classify_many(R[s:s + CHUNK], cost) for s in range(0, len(R), CHUNK)])
    return PhaseGrid(n, axes, fixed, resolution, cells.reshape(resolution, resolution))


def _upper_edge(pred, c0: float, c_max: float = 1e12, rel: float = 1e-13):
    """Supremum of c >= c0 with ``pred`` true, assuming it holds on an initial interval."""
    hi = c0
    while pred(hi):
        hi *= 2.0
        if hi > c_max:
            return math.inf
    lo = hi / 2.0 if hi > c0 else 0.0
    while hi - lo > rel * hi:
        mid = 0.5 * (lo + hi)
        if pred(mid):
            lo = mid
        else:
            hi = mid
    return lo


def cost_thresholds_duopoly(r1: float, r2: float):
    """``(c_low, c_high)`` for the duopoly with references ``r1, r2``.

    ``c_low`` bounds the costs for which both players meet at 1/2 (``inf``
    when they always do); ``c_high`` is where the differentiated equilibrium
    starts to exist (None for equal references).
    """
    for v in (r1, r2):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"reference {v!r} outside [0, 1]")
    r = (float(r1), float(r2))

    def undiff(c):
        o = solve_duopoly(r, CostModel.quadratic(c))
        return o.exists and o.classification == "undifferentiated"

    def diff(c):
        o = solve_duopoly(r, CostModel.quadratic(c))
        return o.exists and o.classification == "differentiated"

    c_low = _upper_edge(undiff, 1e-6) if undiff(1e-6) else 0.0
    # References closer than the co-location tolerance count as equal.
    if abs(r[0] - r[1]) <= COLOCATION_TOL:
        return c_low, None
    # Certified differentiation is monotone in c; find a certified cost, then bisect down.
    hi = 1.0 / (2.0 * abs(r[1] - r[0]))
    while not diff(hi):
        hi *= 2.0
        if hi > 1e300:
            return c_low, math.inf
    lo = hi / 2.0
    while hi - lo > 1e-13 * hi:
        mid = 0.5 * (lo + hi)
        if diff(mid):
            hi = mid
        else:
            lo = mid
    return c_low, hi
