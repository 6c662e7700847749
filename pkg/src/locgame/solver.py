"""Equilibrium candidates and their certification.

Every game has at most one candidate profile; it is built from the sorted
references and then certified against three families of conditions:

* pairing windows for peripheral players that share a location,
* the loss matrix ``Delta[i][j]`` of moving just past player j's location,
* the duopoly inequalities (E1/E2 and their general-cost and
  heterogeneous-cost variants).

All public functions take and return profiles in the caller's input order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import (
    COLOCATION_TOL,
    ArityError,
    CostModel,
    DeviationWitness,
    Profile,
    partition,
    payoff,
)

# Slack below zero still accepted for a weak inequality.
SLACK = 1e-12
# Conditions closer to equality than this are surfaced as boundary flags.
BOUNDARY_BAND = 1e-9
BALANCE_TOL = 1e-12


@dataclass(frozen=True)
class FarFlags:
    far_left: bool
    far_right: bool
    # r2 - (r1 + delta1) and (r_n - delta_n) - r_{n-1}; positive means far.
    margin_left: float = math.nan
    margin_right: float = math.nan


@dataclass
class ConditionReport:
    """Values of every condition evaluated on a candidate.

    ``margins`` maps condition names to left-hand sides that must be >= 0;
    ``delta_matrix`` is indexed by input-order players.
    """

    far_flags: FarFlags
    pairing_window_left: Optional[bool] = None
    pairing_window_right: Optional[bool] = None
    delta_matrix: Optional[np.ndarray] = None
    e_inequalities: dict = field(default_factory=dict)
    pair_balance: Optional[bool] = None
    margins: dict = field(default_factory=dict)
    boundary_flags: tuple = ()

    @property
    def min_delta(self) -> float:
        if self.delta_matrix is None or self.delta_matrix.size <= 1:
            return math.inf
        m = self.delta_matrix.copy()
        np.fill_diagonal(m, math.inf)
        return float(m.min())

    @property
    def satisfied(self) -> bool:
        if any(v < -SLACK for v in self.margins.values()):
            return False
        if self.pair_balance is False:
            return False
        return self.min_delta >= -SLACK


@dataclass
class EquilibriumOutcome:
    """Result of solving one game.

    ``candidate`` holds the unique possible equilibrium even when it fails
    certification; ``x_star`` is set only when ``status == "unique"``.
    """

    status: str
    x_star: Optional[tuple]
    candidate: Optional[tuple]
    classification: Optional[str]
    report: ConditionReport
    failed_condition: Optional[str] = None
    certificate: Optional[DeviationWitness] = None

    @property
    def exists(self) -> bool:
        return self.status == "unique"


def far_flags(r: Sequence[float], cost: CostModel) -> FarFlags:
    prof = Profile.of(r)
    n = len(prof)
    if n < 2:
        return FarFlags(False, False)
    rs = prof.sorted_values
    d_first = cost.delta(prof.perm[0])
    d_last = cost.delta(prof.perm[-1])
    ml = rs[1] - (rs[0] + d_first)
    mr = (rs[-1] - d_last) - rs[-2]
    return FarFlags(rs[0] + d_first < rs[1], rs[-1] - d_last > rs[-2], ml, mr)


def _limit_clientele(locs: Sequence[float], target: float, side: str) -> float:
    """Clientele of a lone player approaching ``target`` from ``side`` against ``locs``."""
    if side == "+":
        nxt = min((v for v in locs if v > target + COLOCATION_TOL), default=None)
        return 1.0 - target if nxt is None else (nxt - target) / 2.0
    prv = max((v for v in locs if v < target - COLOCATION_TOL), default=None)
    return target if prv is None else (target - prv) / 2.0


def _check_index(i: int, n: int):
    if not 0 <= i < n:
        raise IndexError(f"player index {i} out of range for {n} players")


def delta_loss(i: int, j: int, x: Sequence[float], r: Sequence[float], cost: CostModel,
               _payoffs: Optional[Sequence[float]] = None) -> float:
    """Loss of player ``i`` from relocating just past player ``j`` on the far side.

    The one-sided limit is taken analytically. Zero when the two players share
    a location.
    """
    n = len(x)
    if len(r) != n:
        raise ArityError(f"{n} locations for {len(r)} references")
    _check_index(i, n)
    _check_index(j, n)
    xi, xj = float(x[i]), float(x[j])
    if abs(xi - xj) <= COLOCATION_TOL:
        return 0.0
    u = _payoffs if _payoffs is not None else payoff(x, r, cost)
    others = [float(x[k]) for k in range(n) if k != i]
    side = "+" if xi < xj else "-"
    limit = _limit_clientele(others, xj, side) - float(cost.cost(abs(xj - float(r[i])), i))
    return u[i] - limit


def _flag_boundaries(report: ConditionReport) -> tuple:
    flags = [k for k, v in report.margins.items() if abs(v) <= BOUNDARY_BAND]
    ff = report.far_flags
    for name, v in (("far_left", ff.margin_left), ("far_right", ff.margin_right)):
        if abs(v) <= BOUNDARY_BAND:
            flags.append(name)
    if report.delta_matrix is not None:
        n = report.delta_matrix.shape[0]
        for a in range(n):
            for b in range(n):
                if a != b and report.delta_matrix[a, b] != 0.0 and abs(report.delta_matrix[a, b]) <= BOUNDARY_BAND:
                    flags.append(f"delta[{a},{b}]")
    return tuple(flags)


def _duopoly_margins(p: float, rs, ds, cost: CostModel, perm) -> dict:
    """Window conditions for the co-located duopoly candidate at ``p``."""
    if cost.homogeneous:
        return {"half_window_lower": p - (rs[1] - ds[1]),
                "half_window_upper": (rs[0] + ds[0]) - p}
    return {"half_window_player1_lower": p - (rs[0] - ds[0]),
            "half_window_player1_upper": (rs[0] + ds[0]) - p,
            "half_window_player2_lower": p - (rs[1] - ds[1]),
            "half_window_player2_upper": (rs[1] + ds[1]) - p}


def _e_inequalities(rs, ds, cost: CostModel, perm) -> dict:
    r1, r2 = rs
    d1, d2 = ds
    if cost.kind == "quadratic":
        c = cost.c
        gap = c * (r2 - r1) ** 2
        return {"E1": gap + r1 + r2 - 1.0 - d1, "E2": gap - (r1 + r2) + 1.0 - d1}
    if cost.kind == "heterogeneous":
        c1, c2 = cost.c_list[perm[0]], cost.c_list[perm[1]]
        return {
            "E1''": (c1 * (r2 - r1) ** 2 - 2 * c1 * d2 * (r2 - r1) + 0.5 * (r1 + d1)
                     + 1.5 * (r2 - d2) + c1 * (d2 ** 2 - d1 ** 2) - 1.0),
            "E2''": (c2 * (r2 - r1) ** 2 - 2 * c2 * d1 * (r2 - r1) - 0.5 * (r2 - d2)
                     - 1.5 * (r1 + d1) - c2 * (d2 ** 2 - d1 ** 2) + 1.0),
        }
    g = cost.cost
    d = d1
    common = float(g(r2 - r1 - d)) - float(g(d))
    return {"E1'": common + (r1 + 3 * r2) / 2 - 1.0 - d,
            "E2'": common - (3 * r1 + r2) / 2 + 1.0 - d}


def check_conditions(x_star: Sequence[float], r: Sequence[float], cost: CostModel) -> ConditionReport:
    """Evaluate every equilibrium condition on the candidate ``x_star``.

    For two players the reference regime picks which family applies: the
    window around the shared location, or the E-inequalities. For three or
    more players the pairing windows apply on each non-far side.
    """
    n = len(r)
    if len(x_star) != n:
        raise ArityError(f"{len(x_star)} locations for {n} references")
    cost.check_arity(n)
    prof = Profile.of(r)
    perm = prof.perm
    rs = prof.sorted_values
    xs = [float(x_star[k]) for k in perm]
    ds = [cost.delta(k) for k in perm]
    flags = far_flags(r, cost)
    report = ConditionReport(far_flags=flags)
    if n == 1:
        report.delta_matrix = np.zeros((1, 1))
        return report

    part = partition(x_star)
    u = [part.q[i] - float(cost.cost(abs(float(x_star[i]) - float(r[i])), i)) for i in range(n)]
    dm = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                dm[i, j] = delta_loss(i, j, x_star, r, cost, _payoffs=u)
    report.delta_matrix = dm

    balanced = True
    for i in range(n):
        occ = part.occupancy[part.site[i]]
        if occ > 2 or (occ == 2 and abs(part.q_left[i] - part.q_right[i]) > BALANCE_TOL):
            balanced = False
    report.pair_balance = balanced

    if n == 2:
        branch = (rs[0] + ds[0]) - (rs[1] - ds[1])
        if branch >= 0:
            report.margins.update(_duopoly_margins(xs[0], rs, ds, cost, perm))
            ok = all(v >= -SLACK for v in report.margins.values())
            report.pairing_window_left = report.pairing_window_right = ok
        else:
            report.e_inequalities = _e_inequalities(rs, ds, cost, perm)
            report.margins.update(report.e_inequalities)
        report.boundary_flags = _flag_boundaries(report)
        if abs(branch) <= BOUNDARY_BAND:
            # Shifted references (nearly) meet: the regime choice itself is a knife edge.
            report.boundary_flags += ("regime_tie",)
        return report

    if not flags.far_left:
        p = xs[0]
        report.margins["window_left_lower"] = p - rs[1]
        report.margins["window_left_upper"] = (rs[0] + ds[0]) - p
        report.pairing_window_left = (report.margins["window_left_lower"] >= -SLACK
                                      and report.margins["window_left_upper"] >= -SLACK)
    if not flags.far_right:
        p = xs[-1]
        report.margins["window_right_lower"] = p - (rs[-1] - ds[-1])
        report.margins["window_right_upper"] = rs[-2] - p
        report.pairing_window_right = (report.margins["window_right_lower"] >= -SLACK
                                       and report.margins["window_right_upper"] >= -SLACK)
    report.boundary_flags = _flag_boundaries(report)
    return report


def _build_candidate(rs: Sequence[float], ds: Sequence[float], flags: FarFlags):
    """Sorted candidate profile and its classification, or ``(None, None)``."""
    n = len(rs)
    if n == 1:
        return list(rs), "differentiated"
    if n == 2:
        if rs[1] - ds[1] <= rs[0] + ds[0]:
            return [0.5, 0.5], "undifferentiated"
        return [rs[0] + ds[0], rs[1] - ds[1]], "differentiated"
    if n <= 4 and not (flags.far_left or flags.far_right):
        return None, None
    x = list(rs)
    if flags.far_left:
        x[0] = rs[0] + ds[0]
    if flags.far_right:
        x[-1] = rs[-1] - ds[-1]
    # Pair locations balance left and right clientele against the realized neighbour.
    left_pair = None if flags.far_left else x[2] / 3.0
    right_pair = None if flags.far_right else (2.0 + x[n - 3]) / 3.0
    if left_pair is not None:
        x[0] = x[1] = left_pair
    if right_pair is not None:
        x[-1] = x[-2] = right_pair
    if left_pair is None and right_pair is None:
        label = "differentiated"
    elif right_pair is None:
        label = "left-paired"
    elif left_pair is None:
        label = "right-paired"
    else:
        label = "both-paired"
    return x, label


def _move_gain(x, r, cost, i, y, base) -> float:
    moved = list(x)
    moved[i] = y
    return payoff(moved, r, cost)[i] - base[i]


def _limit_gain(x, r, cost, i, target, side, base) -> float:
    others = [float(x[k]) for k in range(len(x)) if k != i]
    value = _limit_clientele(others, target, side) - float(cost.cost(abs(target - float(r[i])), i))
    return value - base[i]


def _witnesses(x, r, cost: CostModel, prof: Profile, report: ConditionReport):
    """Profitable deviations implied by each failed condition, as (gain, name, witness)."""
    n = len(x)
    perm = prof.perm
    rs = prof.sorted_values
    xs = [float(x[k]) for k in perm]
    base = payoff(x, r, cost)
    out = []

    def concrete(name, i, y):
        g = _move_gain(x, r, cost, i, y, base)
        out.append((g, name, DeviationWitness(i, float(y), None, g)))

    def limit(name, i, target, side):
        g = _limit_gain(x, r, cost, i, target, side, base)
        out.append((g, name, DeviationWitness(i, float(target), side, g)))

    m = report.margins
    if n == 2 and xs[0] == xs[1]:
        for k in range(2):
            i = perm[k]
            dk = cost.delta(i)
            if xs[k] > rs[k] + dk + SLACK:
                concrete("half_window", i, max(rs[k] + dk, 0.0))
            elif xs[k] < rs[k] - dk - SLACK:
                concrete("half_window", i, min(rs[k] - dk, 1.0))
    if m.get("window_left_lower", 0.0) < -SLACK:
        i = perm[1]
        if rs[1] < xs[2] - COLOCATION_TOL:
            concrete("window_left_lower", i, rs[1])
        else:
            limit("window_left_lower", i, xs[2], "-")
    if m.get("window_left_upper", 0.0) < -SLACK:
        concrete("window_left_upper", perm[0], max(rs[0] + cost.delta(perm[0]), 0.0))
    if m.get("window_right_lower", 0.0) < -SLACK:
        concrete("window_right_lower", perm[-1], min(rs[-1] - cost.delta(perm[-1]), 1.0))
    if m.get("window_right_upper", 0.0) < -SLACK:
        i = perm[-2]
        if rs[-2] > xs[-3] + COLOCATION_TOL:
            concrete("window_right_upper", i, rs[-2])
        else:
            limit("window_right_upper", i, xs[-3], "+")
    if report.pair_balance is False:
        part = partition(x)
        for i in range(n):
            if part.occupancy[part.site[i]] >= 2:
                for side in "-+":
                    limit("pair_balance", i, float(x[i]), side)
    dm = report.delta_matrix
    if dm is not None:
        for i in range(n):
            for j in range(n):
                if i != j and dm[i, j] < -SLACK:
                    side = "+" if float(x[i]) < float(x[j]) else "-"
                    out.append((-dm[i, j], f"delta[{i},{j}]",
                                DeviationWitness(i, float(x[j]), side, float(-dm[i, j]))))
    # A failed E-inequality shows up as a negative delta between the two players.
    return [w for w in out if w[0] > 0]


def _finish(r, cost: CostModel, prof: Profile, xs_sorted, label) -> EquilibriumOutcome:
    if xs_sorted is None:
        report = ConditionReport(far_flags=far_flags(r, cost))
        report.boundary_flags = _flag_boundaries(report)
        return EquilibriumOutcome("none", None, None, None, report, failed_condition="no_candidate")
    x = prof.to_input_order(xs_sorted)
    report = check_conditions(x, r, cost)
    if report.satisfied:
        return EquilibriumOutcome("unique", x, x, label, report)
    found = _witnesses(x, r, cost, prof, report)
    failed = _first_failed(report)
    cert = None
    if found:
        failed, cert = _pick(found)
    return EquilibriumOutcome("none", None, x, label, report, failed_condition=failed, certificate=cert)


def _pick(found):
    """Largest gain; near-ties go to the lowest player, then the lowest target."""
    top = max(w[0] for w in found)
    tied = [w for w in found if w[0] >= top - 1e-12]
    best = min(tied, key=lambda w: (w[2].player, w[2].target))
    return best[1], best[2]


def _first_failed(report: ConditionReport) -> Optional[str]:
    for k, v in report.margins.items():
        if v < -SLACK:
            return k
    if report.pair_balance is False:
        return "pair_balance"
    if report.min_delta < -SLACK:
        return "delta"
    return None


def _prepare(r: Sequence[float], cost: CostModel):
    prof = Profile.of(r)
    cost.check_arity(len(prof))
    ds = [cost.delta(k) for k in prof.perm]
    return prof, ds


def solve_duopoly(r: Sequence[float], cost: CostModel) -> EquilibriumOutcome:
    """Two players: ``(1/2, 1/2)`` when the shifted references cross, else ``(r1+d1, r2-d2)``."""
    if len(r) != 2:
        raise ArityError(f"duopoly needs 2 references, got {len(r)}")
    prof, ds = _prepare(r, cost)
    xs, label = _build_candidate(prof.sorted_values, ds, far_flags(r, cost))
    return _finish(r, cost, prof, xs, label)


def solve_triopoly(r: Sequence[float], cost: CostModel) -> EquilibriumOutcome:
    """Three players; no candidate unless at least one extreme player is far."""
    if len(r) != 3:
        raise ArityError(f"triopoly needs 3 references, got {len(r)}")
    prof, ds = _prepare(r, cost)
    xs, label = _build_candidate(prof.sorted_values, ds, far_flags(r, cost))
    return _finish(r, cost, prof, xs, label)


def solve_n(r: Sequence[float], cost: CostModel) -> EquilibriumOutcome:
    """Solve a game with any number of players.

    Args:
        r: reference locations in [0, 1], any order.
        cost: deviation cost model; heterogeneous costs need ``len(r) == 2``.

    Returns:
        The unique equilibrium, or ``status == "none"`` with the failing
        condition and, when one exists, a profitable-deviation certificate.
    """
    n = len(r)
    if n == 2:
        return solve_duopoly(r, cost)
    if n == 3:
        return solve_triopoly(r, cost)
    prof, ds = _prepare(r, cost)
    xs, label = _build_candidate(prof.sorted_values, ds, far_flags(r, cost))
    return _finish(r, cost, prof, xs, label)


solve = solve_n
