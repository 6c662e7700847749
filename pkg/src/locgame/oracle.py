"""Independent best-response checks for arbitrary location profiles.

A deviating player faces the fixed locations of its opponents. Between two
consecutive opponent locations its clientele is constant (interior slabs) or
affine with slope 1/2 (the two end slabs), and its cost is convex, so the
supremum over each slab sits at a clamped reference point, at ``r_i +- delta``,
or at a slab endpoint approached from inside. Together with the opponent
locations themselves this gives a finite candidate set.

Nothing here reuses the solver's condition code.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import COLOCATION_TOL, ArityError, CostModel, DeviationWitness, payoff

TIE_TOL = 1e-12


@dataclass(frozen=True)
class BestResponseResult:
    """Supremum payoff available to one player against fixed opponents.

    ``side`` is ``"-"``/``"+"`` when the supremum is only approached from
    below/above ``argmax`` (hence not attained), otherwise None.
    """

    value: float
    attained: bool
    argmax: float
    side: Optional[str] = None


def _opponent_sites(x: Sequence[float], i: int):
    vals = sorted(float(v) for k, v in enumerate(x) if k != i)
    locs, counts = [], []
    for v in vals:
        if locs and v - locs[-1] <= COLOCATION_TOL:
            counts[-1] += 1
        else:
            locs.append(v)
            counts.append(1)
    return locs, counts


def _clientele(y: float, locs: list, counts: list) -> float:
    """Clientele of a deviator standing at ``y`` against opponent sites."""
    if not locs:
        return 1.0
    k = bisect_left(locs, y)
    for s in (k - 1, k):
        if 0 <= s < len(locs) and abs(locs[s] - y) <= COLOCATION_TOL:
            lo = 0.0 if s == 0 else (locs[s - 1] + locs[s]) / 2.0
            hi = 1.0 if s == len(locs) - 1 else (locs[s] + locs[s + 1]) / 2.0
            return (hi - lo) / (counts[s] + 1)
    lo = 0.0 if k == 0 else (locs[k - 1] + y) / 2.0
    hi = 1.0 if k == len(locs) else (y + locs[k]) / 2.0
    return hi - lo


def _one_sided(locs: list, s: int, side: str) -> float:
    """Limit clientele just below (``-``) or above (``+``) opponent site ``s``."""
    if side == "-":
        return locs[0] if s == 0 else (locs[s] - locs[s - 1]) / 2.0
    return 1.0 - locs[-1] if s == len(locs) - 1 else (locs[s + 1] - locs[s]) / 2.0


def _candidates(i: int, x: Sequence[float], r: Sequence[float], cost: CostModel):
    """Yield ``(value, attained, location, side)`` for every candidate move of player i."""
    locs, counts = _opponent_sites(x, i)
    ri = float(r[i])
    d = cost.delta(i)

    def val(y, clientele):
        return clientele - float(cost.cost(abs(y - ri), i))

    if not locs:
        y = ri
        yield val(y, 1.0), True, y, None
        return
    # Open slabs between consecutive sites, plus the two end slabs.
    slabs = [(0.0, locs[0], "left")]
    slabs += [(locs[k], locs[k + 1], "mid") for k in range(len(locs) - 1)]
    slabs.append((locs[-1], 1.0, "right"))
    for lo, hi, kind in slabs:
        if kind == "left":
            if hi <= COLOCATION_TOL:
                continue
            y = min(max(ri + d, 0.0), hi)
            if y < hi - COLOCATION_TOL:
                yield val(y, _clientele(y, locs, counts)), True, y, None
        elif kind == "right":
            if lo >= 1.0 - COLOCATION_TOL:
                continue
            y = min(max(ri - d, lo), 1.0)
            if y > lo + COLOCATION_TOL:
                yield val(y, _clientele(y, locs, counts)), True, y, None
        else:
            y = min(max(ri, lo), hi)
            if lo + COLOCATION_TOL < y < hi - COLOCATION_TOL:
                yield val(y, _clientele(y, locs, counts)), True, y, None
    for s, loc in enumerate(locs):
        yield val(loc, _clientele(loc, locs, counts)), True, loc, None
        if loc > COLOCATION_TOL:
            yield val(loc, _one_sided(locs, s, "-")), False, loc, "-"
        if loc < 1.0 - COLOCATION_TOL:
            yield val(loc, _one_sided(locs, s, "+")), False, loc, "+"


def best_response_exact(i: int, x: Sequence[float], r: Sequence[float], cost: CostModel) -> BestResponseResult:
    """Supremum of player ``i``'s payoff over all of [0, 1], opponents fixed."""
    if len(x) != len(r):
        raise ArityError(f"{len(x)} locations for {len(r)} references")
    if not 0 <= i < len(x):
        raise IndexError(f"player index {i} out of range")
    cost.check_arity(len(x))
    cands = list(_candidates(i, x, r, cost))
    top = max(c[0] for c in cands)
    tied = [c for c in cands if c[0] >= top - TIE_TOL]
    # Prefer an attained point among near-ties, then the lowest location.
    value, attained, y, side = min(tied, key=lambda c: (not c[1], c[2]))
    return BestResponseResult(top, attained, y, side)


def is_equilibrium_exact(x: Sequence[float], r: Sequence[float], cost: CostModel,
                         tol: float = 1e-9):
    """Nash test over the exact candidate sets.

    Returns:
        ``(True, None)`` when no player can gain more than ``tol``, otherwise
        ``(False, witness)`` with the largest-gain deviation (near-ties go to
        the lowest player index, then the lowest target).
    """
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    current = payoff(x, r, cost)
    best = None
    for i in range(len(x)):
        br = best_response_exact(i, x, r, cost)
        gain = br.value - current[i]
        if gain > tol and (best is None or gain > best.gain + TIE_TOL):
            best = DeviationWitness(i, br.argmax, br.side, gain)
    return best is None, best


def realize_witness(x: Sequence[float], r: Sequence[float], cost: CostModel,
                    witness: DeviationWitness):
    """Re-evaluate a witness through :func:`payoff` at a concrete location.

    One-sided limits are realized at ``target -+ eps`` for the first ``eps`` in
    a shrinking sequence that gives a strictly positive gain.

    Returns:
        ``(location, gain)``; gain is the last one tried if none was positive.
    """
    i = witness.player
    base = payoff(x, r, cost)[i]
    epsilons = (0.0,) if witness.side is None else (1e-6, 1e-7, 1e-8, 1e-9, 1e-10, 1e-11)
    loc, gain = witness.target, -math.inf
    for eps in epsilons:
        loc = min(max(witness.location(eps), 0.0), 1.0)
        moved = list(map(float, x))
        moved[i] = loc
        gain = payoff(moved, r, cost)[i] - base
        if gain > 0:
            break
    return loc, gain


def _grid_clientele(grid: np.ndarray, locs: list, counts: list) -> np.ndarray:
    if not locs:
        return np.ones_like(grid)
    L = np.asarray(locs)
    C = np.asarray(counts, dtype=float)
    k = np.searchsorted(L, grid)
    prev = np.where(k > 0, L[np.maximum(k - 1, 0)], np.nan)
    nxt = np.where(k < len(L), L[np.minimum(k, len(L) - 1)], np.nan)
    lo = np.where(k > 0, (prev + grid) / 2.0, 0.0)
    hi = np.where(k < len(L), (grid + nxt) / 2.0, 1.0)
    q = hi - lo
    # Grid points sitting on an opponent site share that site's segment.
    bounds = np.concatenate(([0.0], (L[:-1] + L[1:]) / 2.0, [1.0]))
    for s, loc in enumerate(locs):
        on = np.abs(grid - loc) <= COLOCATION_TOL
        if on.any():
            q[on] = (bounds[s + 1] - bounds[s]) / (C[s] + 1)
    return q


def falsify_on_grid(x: Sequence[float], r: Sequence[float], cost: CostModel,
                    grid_size: int = 2001) -> Optional[DeviationWitness]:
    """Search deviations on the grid ``k / (grid_size - 1)``.

    Only gains above ``1e-9 + 1/grid_size`` are reported, so a hit is always a
    genuine profitable deviation; a miss proves nothing.
    """
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    if len(x) != len(r):
        raise ArityError(f"{len(x)} locations for {len(r)} references")
    grid = np.linspace(0.0, 1.0, grid_size)
    current = payoff(x, r, cost)
    slack = 1e-9 + 1.0 / grid_size
    best = None
    for i in range(len(x)):
        locs, counts = _opponent_sites(x, i)
        vals = _grid_clientele(grid, locs, counts) - np.asarray(
            cost.cost(np.abs(grid - float(r[i])), i), dtype=float)
        gains = vals - current[i]
        k = int(np.argmax(gains))
        if gains[k] > slack and (best is None or gains[k] > best.gain + TIE_TOL):
            best = DeviationWitness(i, float(grid[k]), None, float(gains[k]))
    return best
