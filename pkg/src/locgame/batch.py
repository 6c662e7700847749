"""Vectorized existence classification for many reference vectors at once.

Monte Carlo estimates and phase grids need millions of games; building an
:class:`EquilibriumOutcome` per game is far too slow for that, so this module
re-expresses the solver's candidate construction and certification as numpy
array operations over rows. ``tests/test_batch.py`` checks that it agrees
with :func:`locgame.solver.solve_n` game by game.
"""

from __future__ import annotations

import numpy as np

from .core import COLOCATION_TOL, ArityError, CostModel
from .solver import SLACK, BALANCE_TOL

NONE, PAIRED, DIFFERENTIATED = 0, 1, 2
CLASS_NAMES = {NONE: "none", PAIRED: "undiff", DIFFERENTIATED: "diff"}


def _cost_fn(cost: CostModel, C):
    """Array cost ``gamma_k(d)`` for the sorted player column ``k``."""
    if cost.kind == "heterogeneous":
        return lambda d, k: C[:, k] * d * d
    return lambda d, k: np.asarray(cost.cost(d), dtype=float)


def _certify(X, RS, DS, gam, margins):
    """Delta-matrix, occupancy and balance tests on sorted candidates ``X``."""
    m, n = X.shape
    ok = np.ones(m, dtype=bool)
    for v in margins:
        ok &= v >= -SLACK
    # Distinct left/right neighbours and occupancy of each sorted slot.
    left = np.full((m, n), np.nan)
    right = np.full((m, n), np.nan)
    occ = np.ones((m, n), dtype=int)
    for k in range(n):
        for j in range(n):
            if j == k:
                continue
            below = X[:, j] < X[:, k] - COLOCATION_TOL
            above = X[:, j] > X[:, k] + COLOCATION_TOL
            left[:, k] = np.where(below, np.fmax(left[:, k], X[:, j]), left[:, k])
            right[:, k] = np.where(above, np.fmin(right[:, k], X[:, j]), right[:, k])
            occ[:, k] += ~(below | above)
    lo = np.where(np.isnan(left), 0.0, (left + X) / 2.0)
    hi = np.where(np.isnan(right), 1.0, (X + right) / 2.0)
    q = (hi - lo) / occ
    ql = (X - lo) / occ
    qr = (hi - X) / occ
    ok &= np.all(occ <= 2, axis=1)
    ok &= np.all((occ < 2) | (np.abs(ql - qr) <= BALANCE_TOL), axis=1)
    u = np.stack([q[:, i] - gam(np.abs(X[:, i] - RS[:, i]), i) for i in range(n)], axis=1)
    # Limit clientele just past slot j; it does not depend on who moves.
    lim_plus = np.where(np.isnan(right), 1.0 - X, (right - X) / 2.0)
    lim_minus = np.where(np.isnan(left), X, (X - left) / 2.0)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            lim = np.where(X[:, i] < X[:, j], lim_plus[:, j], lim_minus[:, j])
            d = u[:, i] - (lim - gam(np.abs(X[:, j] - RS[:, i]), i))
            same = np.abs(X[:, i] - X[:, j]) <= COLOCATION_TOL
            ok &= same | (d >= -SLACK)
    return ok


def classify_many(R, cost: CostModel) -> np.ndarray:
    """Existence codes for each row of ``R``.

    Args:
        R: array of shape ``(m, n)`` with references in [0, 1].
        cost: cost model; heterogeneous costs need ``n == 2``.

    Returns:
        int8 array with 0 (no equilibrium), 1 (some players share a location)
        or 2 (all locations distinct).
    """
    R = np.asarray(R, dtype=float)
    if R.ndim != 2 or R.shape[1] < 1:
        raise ArityError("references must be a 2-d array with at least one column")
    m, n = R.shape
    cost.check_arity(n)
    perm = np.argsort(R, axis=1, kind="stable")
    RS = np.take_along_axis(R, perm, axis=1)
    if cost.kind == "heterogeneous":
        C = np.asarray(cost.c_list)[perm]
        DS = 1.0 / (4.0 * C)
    else:
        C = None
        DS = np.full((m, n), cost.delta(0))
    gam = _cost_fn(cost, C)
    codes = np.zeros(m, dtype=np.int8)
    if n == 1:
        codes[:] = DIFFERENTIATED
        return codes

    if n == 2:
        undiff = RS[:, 1] - DS[:, 1] <= RS[:, 0] + DS[:, 0]
        X = np.where(undiff[:, None], 0.5, np.stack([RS[:, 0] + DS[:, 0], RS[:, 1] - DS[:, 1]], axis=1))
        margins = []
        if cost.homogeneous:
            win = [0.5 - (RS[:, 1] - DS[:, 1]), (RS[:, 0] + DS[:, 0]) - 0.5]
        else:
            win = [0.5 - (RS[:, k] - DS[:, k]) for k in range(2)]
            win += [(RS[:, k] + DS[:, k]) - 0.5 for k in range(2)]
        for w in win:
            margins.append(np.where(undiff, w, 0.0))
        for e in _e_values(RS, DS, cost, C):
            margins.append(np.where(undiff, 0.0, e))
        ok = _certify(X, RS, DS, gam, margins)
        codes[ok] = np.where(undiff[ok], PAIRED, DIFFERENTIATED)
        return codes

    far_l = RS[:, 0] + DS[:, 0] < RS[:, 1]
    far_r = RS[:, -1] - DS[:, -1] > RS[:, -2]
    has = np.ones(m, dtype=bool) if n >= 5 else (far_l | far_r)
    X = RS.copy()
    X[:, 0] = np.where(far_l, RS[:, 0] + DS[:, 0], X[:, 0])
    X[:, -1] = np.where(far_r, RS[:, -1] - DS[:, -1], X[:, -1])
    lp = X[:, 2] / 3.0
    rp = (2.0 + X[:, n - 3]) / 3.0
    X[:, 0] = np.where(far_l, X[:, 0], lp)
    X[:, 1] = np.where(far_l, X[:, 1], lp)
    X[:, -1] = np.where(far_r, X[:, -1], rp)
    X[:, -2] = np.where(far_r, X[:, -2], rp)
    margins = [
        np.where(far_l, 0.0, X[:, 0] - RS[:, 1]),
        np.where(far_l, 0.0, RS[:, 0] + DS[:, 0] - X[:, 0]),
        np.where(far_r, 0.0, X[:, -1] - (RS[:, -1] - DS[:, -1])),
        np.where(far_r, 0.0, RS[:, -2] - X[:, -1]),
    ]
    ok = has & _certify(X, RS, DS, gam, margins)
    codes[ok] = np.where(far_l[ok] & far_r[ok], DIFFERENTIATED, PAIRED)
    return codes


def _e_values(RS, DS, cost: CostModel, C):
    r1, r2 = RS[:, 0], RS[:, 1]
    d1, d2 = DS[:, 0], DS[:, 1]
    if cost.kind == "quadratic":
        gap = cost.c * (r2 - r1) ** 2
        return [gap + r1 + r2 - 1.0 - d1, gap - (r1 + r2) + 1.0 - d1]
    if cost.kind == "heterogeneous":
        c1, c2 = C[:, 0], C[:, 1]
        return [
            (c1 * (r2 - r1) ** 2 - 2 * c1 * d2 * (r2 - r1) + 0.5 * (r1 + d1)
             + 1.5 * (r2 - d2) + c1 * (d2 ** 2 - d1 ** 2) - 1.0),
            (c2 * (r2 - r1) ** 2 - 2 * c2 * d1 * (r2 - r1) - 0.5 * (r2 - d2)
             - 1.5 * (r1 + d1) - c2 * (d2 ** 2 - d1 ** 2) + 1.0),
        ]
    g = lambda d: np.asarray(cost.cost(d), dtype=float)
    # Only meaningful where the references are far apart; elsewhere masked out.
    with np.errstate(invalid="ignore"):
        common = g(np.abs(r2 - r1 - d1)) - g(np.minimum(d1, 1.0))
        return [common + (r1 + 3 * r2) / 2 - 1.0 - d1, common - (3 * r1 + r2) / 2 + 1.0 - d1]
