"""Primitive mathematics of the location game with references.

Players pick locations on [0, 1]; every point of the interval is served by the
closest location, co-located players split their share equally, and player i
pays ``gamma_i(|x_i - r_i|)`` for standing away from its reference ``r_i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import bisect

# Two user-supplied locations closer than this are treated as one location.
COLOCATION_TOL = 1e-12
# Number of probe points used to check that a general gamma' increases.
CONVEXITY_PROBES = 1001


class LocgameError(Exception):
    """Base class for errors raised by this package."""


class InvalidCostError(LocgameError, ValueError):
    pass


class UnsupportedConfigurationError(LocgameError, ValueError):
    pass


class ArityError(LocgameError, ValueError):
    pass


def _as_array_fn(fn: Callable) -> Callable:
    """Wrap a scalar callable so it also accepts numpy arrays."""
    vec = np.vectorize(fn, otypes=[float])

    def call(d):
        if np.ndim(d) == 0:
            return float(fn(float(d)))
        try:
            out = np.asarray(fn(d), dtype=float)
        except Exception:
            return vec(d)
        if out.shape != np.shape(d):
            return vec(d)
        return out

    return call


@dataclass(frozen=True)
class CostModel:
    """Deviation cost ``gamma(d)`` paid for standing at distance d from the reference.

    Build instances with :meth:`quadratic`, :meth:`heterogeneous`,
    :meth:`general` or :meth:`power` rather than the raw constructor.
    """

    kind: str
    c: Optional[float] = None
    c_list: Optional[tuple] = None
    gamma: Optional[Callable] = field(default=None, compare=False)
    gamma_prime: Optional[Callable] = field(default=None, compare=False)
    label: str = ""
    _delta: float = field(default=math.nan, repr=False, compare=False)

    def __post_init__(self):
        if self.kind == "quadratic":
            if self.c is None or not self.c > 0 or not math.isfinite(self.c):
                raise InvalidCostError(f"quadratic cost needs c > 0, got {self.c!r}")
            object.__setattr__(self, "c", float(self.c))
        elif self.kind == "heterogeneous":
            cs = tuple(float(v) for v in (self.c_list or ()))
            if not cs or not all(v > 0 and math.isfinite(v) for v in cs):
                raise InvalidCostError(f"heterogeneous cost needs every c_i > 0, got {self.c_list!r}")
            object.__setattr__(self, "c_list", cs)
        elif self.kind == "general":
            if self.gamma is None or self.gamma_prime is None:
                raise InvalidCostError("general cost needs both gamma and gamma_prime")
            g = _as_array_fn(self.gamma)
            gp = _as_array_fn(self.gamma_prime)
            object.__setattr__(self, "gamma", g)
            object.__setattr__(self, "gamma_prime", gp)
            self._validate_general()
            object.__setattr__(self, "_delta", _solve_delta(gp))
        else:
            raise InvalidCostError(f"unknown cost kind {self.kind!r}")

    @classmethod
    def quadratic(cls, c: float) -> "CostModel":
        return cls(kind="quadratic", c=c, label=f"quad:{c!r}")

    @classmethod
    def heterogeneous(cls, cs: Sequence[float]) -> "CostModel":
        return cls(kind="heterogeneous", c_list=tuple(cs),
                   label="hetero:" + ",".join(repr(float(v)) for v in cs))

    @classmethod
    def general(cls, gamma: Callable, gamma_prime: Callable, label: str = "general") -> "CostModel":
        return cls(kind="general", gamma=gamma, gamma_prime=gamma_prime, label=label)

    @classmethod
    def power(cls, p: float, a: float = 1.0) -> "CostModel":
        """``gamma(d) = a * d**p`` with ``p > 1`` and ``a > 0``."""
        if not p > 1 or not a > 0:
            raise InvalidCostError(f"power cost needs p > 1 and a > 0, got p={p!r}, a={a!r}")
        return cls.general(lambda d: a * np.power(d, p),
                           lambda d: a * p * np.power(d, p - 1),
                           label=f"power:{p!r},{a!r}")

    def _validate_general(self):
        g0 = self.gamma(0.0)
        if not abs(g0) <= 1e-12:
            raise InvalidCostError(f"gamma(0) must be 0, got {g0!r}")
        grid = np.linspace(0.0, 1.0, CONVEXITY_PROBES)
        slopes = np.asarray(self.gamma_prime(grid), dtype=float)
        if not np.all(np.isfinite(slopes)):
            raise InvalidCostError("gamma' is not finite on [0, 1]")
        if slopes[0] < 0:
            raise InvalidCostError("gamma' must be nonnegative")
        if not np.all(np.diff(slopes) > 0):
            raise InvalidCostError("gamma' must be strictly increasing (gamma strictly convex)")

    @property
    def homogeneous(self) -> bool:
        return self.kind != "heterogeneous"

    def check_arity(self, n: int) -> None:
        if self.kind == "heterogeneous":
            if n != 2:
                raise UnsupportedConfigurationError(
                    "heterogeneous costs are only supported for the duopoly (n = 2)")
            if len(self.c_list) != n:
                raise ArityError(f"cost lists {len(self.c_list)} coefficients for {n} players")

    def cost(self, d, player: int = 0):
        """Cost paid by ``player`` at distance ``d`` (scalar or array)."""
        if self.kind == "quadratic":
            return self.c * np.square(d) if np.ndim(d) else self.c * float(d) ** 2
        if self.kind == "heterogeneous":
            c = self.c_list[player]
            return c * np.square(d) if np.ndim(d) else c * float(d) ** 2
        return self.gamma(d)

    def marginal(self, d, player: int = 0):
        if self.kind == "quadratic":
            return 2.0 * self.c * d
        if self.kind == "heterogeneous":
            return 2.0 * self.c_list[player] * d
        return self.gamma_prime(d)

    def delta(self, player: int = 0) -> float:
        if self.kind == "quadratic":
            return 1.0 / (4.0 * self.c)
        if self.kind == "heterogeneous":
            return 1.0 / (4.0 * self.c_list[player])
        return self._delta


def _solve_delta(gamma_prime: Callable) -> float:
    lo_slope = float(gamma_prime(0.0))
    hi_slope = float(gamma_prime(1.0))
    if hi_slope < 0.5:
        return math.inf
    if lo_slope > 0.5:
        return 0.0
    if lo_slope == 0.5:
        return 0.0
    if hi_slope == 0.5:
        return 1.0
    return bisect(lambda d: float(gamma_prime(d)) - 0.5, 0.0, 1.0, xtol=1e-300, rtol=8.9e-16, maxiter=4000)


def compute_delta(cost: CostModel, player: int = 0) -> float:
    """Optimal deviation distance: where the marginal cost reaches the marginal gain 1/2.

    Quadratic kinds return ``1/(4c)`` unclamped. General costs return the root
    of ``gamma'(d) = 1/2`` on [0, 1], ``math.inf`` when ``gamma'`` stays below
    1/2, and 0 when it starts above 1/2.
    """
    return cost.delta(player)


@dataclass(frozen=True)
class Profile:
    """A vector of positions with the permutation that sorts it.

    ``perm[k]`` is the input index of the k-th smallest position; the sort is
    stable, so tied positions keep their input order.
    """

    values: tuple
    sorted_values: tuple
    perm: tuple

    @classmethod
    def of(cls, values: Sequence[float]) -> "Profile":
        if isinstance(values, Profile):
            return values
        vals = tuple(float(v) for v in values)
        if not vals:
            raise ArityError("a profile needs at least one position")
        for v in vals:
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"position {v!r} outside [0, 1]")
        perm = tuple(sorted(range(len(vals)), key=lambda k: vals[k]))
        return cls(vals, tuple(vals[k] for k in perm), perm)

    def __len__(self):
        return len(self.values)

    def to_input_order(self, sorted_items: Sequence) -> tuple:
        out = [None] * len(self.perm)
        for k, idx in enumerate(self.perm):
            out[idx] = sorted_items[k]
        return tuple(out)


@dataclass(frozen=True)
class MarketPartition:
    """Clientele split of [0, 1] induced by a location profile.

    Per-player tuples (``q``, ``q_left``, ``q_right``, ``site``) are in input order;
    ``site[i]`` indexes into ``distinct_locs``.
    """

    distinct_locs: tuple
    boundaries: tuple
    occupancy: tuple
    site: tuple
    q: tuple
    q_left: tuple
    q_right: tuple


def _group_sites(sorted_vals: Sequence[float], tol: float):
    locs, counts, site_of_sorted = [], [], []
    for v in sorted_vals:
        if locs and v - locs[-1] <= tol:
            counts[-1] += 1
        else:
            locs.append(v)
            counts.append(1)
        site_of_sorted.append(len(locs) - 1)
    return locs, counts, site_of_sorted


def partition(x: Sequence[float], tol: float = COLOCATION_TOL) -> MarketPartition:
    """Split the unit interval among the players of profile ``x``.

    Interior boundaries are midpoints between adjacent distinct locations; the
    end segments ``[0, first]`` and ``[last, 1]`` belong whole to the
    extreme locations.
    """
    prof = Profile.of(x)
    locs, counts, site_sorted = _group_sites(prof.sorted_values, tol)
    m = len(locs)
    bounds = [0.0] + [(locs[k] + locs[k + 1]) / 2.0 for k in range(m - 1)] + [1.0]
    n = len(prof)
    q = [0.0] * n
    ql = [0.0] * n
    qr = [0.0] * n
    site = [0] * n
    for k, idx in enumerate(prof.perm):
        s = site_sorted[k]
        occ = counts[s]
        site[idx] = s
        ql[idx] = (locs[s] - bounds[s]) / occ
        qr[idx] = (bounds[s + 1] - locs[s]) / occ
        q[idx] = (bounds[s + 1] - bounds[s]) / occ
    return MarketPartition(tuple(locs), tuple(bounds), tuple(counts), tuple(site),
                           tuple(q), tuple(ql), tuple(qr))


def payoff(x: Sequence[float], r: Sequence[float], cost: CostModel) -> tuple:
    """Per-player payoffs ``q_i(x) - gamma_i(|x_i - r_i|)`` in input order."""
    if len(x) != len(r):
        raise ArityError(f"{len(x)} locations for {len(r)} references")
    cost.check_arity(len(x))
    q = partition(x).q
    return tuple(q[i] - float(cost.cost(abs(float(x[i]) - float(r[i])), i)) for i in range(len(x)))


def neighborhood(x: Sequence[float], i: int, tol: float = COLOCATION_TOL) -> tuple:
    """``(left_bound, right_bound, card)`` around player ``i``.

    The bounds are the nearest distinct locations strictly below/above
    ``x_i`` (0 and 1 when absent); ``card`` counts players at ``x_i``.
    """
    xi = float(x[i])
    left, right, card = 0.0, 1.0, 0
    for v in x:
        v = float(v)
        if abs(v - xi) <= tol:
            card += 1
        elif v < xi:
            left = max(left, v)
        else:
            right = min(right, v)
    return left, right, card


@dataclass(frozen=True)
class DeviationWitness:
    """A profitable unilateral move.

    ``side`` is None for a concrete location ``target``; ``"-"``/``"+"`` mark a
    one-sided limit approaching ``target`` from below/above.
    """

    player: int
    target: float
    side: Optional[str]
    gain: float

    def location(self, eps: float = 0.0) -> float:
        if self.side == "-":
            return self.target - eps
        if self.side == "+":
            return self.target + eps
        return self.target
