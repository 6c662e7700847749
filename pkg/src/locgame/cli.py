"""Command-line interface: ``locgame {solve,check,prob,phase,threshold}``.

Exit codes: 0 when an equilibrium exists (or the command simply succeeded),
3 when there is none, 2 for usage errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Optional, Sequence

from . import analysis
from .core import CostModel, LocgameError, payoff
from .oracle import falsify_on_grid, is_equilibrium_exact
from .solver import solve_n

EXIT_OK, EXIT_USAGE, EXIT_NONE = 0, 2, 3


class UsageError(Exception):
    pass


def fmt_real(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def to_json(obj, indent: int = 0) -> str:
    """JSON with every real written to 17 significant digits.

    Non-finite reals become the strings ``"inf"``, ``"-inf"``, ``"nan"``.
    """
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(to_json(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + to_json(v, indent + 1) for v in obj) + "\n" + end + "]"
    if obj is None or isinstance(obj, (bool, str)):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    x = float(obj)
    return fmt_real(x) if math.isfinite(x) else json.dumps(fmt_real(x))


def _text_value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return v
    if isinstance(v, int):
        return str(v)
    if isinstance(v, (list, tuple)):
        return ",".join(_text_value(u) for u in v) if v else "[]"
    return fmt_real(v)


def to_text(doc: dict, prefix: str = "") -> str:
    lines = []
    for k, v in doc.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            lines.append(to_text(v, key + ".") if v else f"{key}: {{}}")
        elif isinstance(v, (list, tuple)) and v and isinstance(v[0], (list, tuple)):
            for row_no, row in enumerate(v):
                lines.append(f"{key}[{row_no}]: {_text_value(row)}")
        else:
            lines.append(f"{key}: {_text_value(v)}")
    return "\n".join(line for line in lines if line)


def to_csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    out = [",".join(header)]
    out += [",".join(_text_value(v) for v in row) for row in rows]
    return "\n".join(out)


def parse_reals(text: str, what: str) -> list:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"malformed {what}: {text!r}") from None
    if not vals:
        raise UsageError(f"no {what} given")
    for v in vals:
        if not 0.0 <= v <= 1.0:
            raise UsageError(f"{what} value {v!r} outside [0, 1]")
    return vals


def parse_cost(text: str) -> CostModel:
    """Build a cost model from ``quad:c``, ``hetero:c1,c2`` or ``power:p[,a]``."""
    kind, _, params = text.partition(":")
    try:
        nums = [float(t) for t in params.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"malformed cost parameters: {text!r}") from None
    try:
        if kind == "quad" and len(nums) == 1:
            return CostModel.quadratic(nums[0])
        if kind == "hetero" and len(nums) >= 1:
            return CostModel.heterogeneous(nums)
        if kind == "power" and len(nums) in (1, 2):
            return CostModel.power(nums[0], nums[1] if len(nums) == 2 else 1.0)
    except LocgameError as exc:
        raise UsageError(str(exc)) from None
    raise UsageError(f"unknown cost {text!r}; use quad:c, hetero:c1,c2 or power:p,a")


def _witness_doc(w):
    if w is None:
        return None
    return {"player": w.player + 1, "target": w.target, "side": w.side, "gain": w.gain}


def _square(m):
    return [[float(v) for v in row] for row in m]


def cmd_solve(args) -> tuple:
    r = parse_reals(args.refs, "references")
    cost = parse_cost(args.cost)
    out = solve_n(r, cost)
    rep = out.report
    confirmed = None
    if out.exists:
        confirmed, _ = is_equilibrium_exact(out.x_star, r, cost, tol=args.tol)
    doc = {
        "command": "solve",
        "references": r,
        "cost": cost.label,
        "status": out.status,
        "x_star": list(out.x_star) if out.x_star else None,
        "candidate": list(out.candidate) if out.candidate else None,
        "classification": out.classification,
        "far_left": rep.far_flags.far_left,
        "far_right": rep.far_flags.far_right,
        "pairing_window_left": rep.pairing_window_left,
        "pairing_window_right": rep.pairing_window_right,
        "pair_balance": rep.pair_balance,
        "e_inequalities": dict(rep.e_inequalities),
        "margins": dict(rep.margins),
        "delta_matrix": _square(rep.delta_matrix) if rep.delta_matrix is not None else None,
        "boundary_flags": list(rep.boundary_flags),
        "failed_condition": out.failed_condition,
        "certificate": _witness_doc(out.certificate),
        "oracle_confirmed": confirmed,
    }
    rows = [(k + 1, r[k], (out.x_star or out.candidate or [None] * len(r))[k]) for k in range(len(r))]
    return doc, (("player", "reference", "location"), rows), EXIT_OK if out.exists else EXIT_NONE


def cmd_check(args) -> tuple:
    r = parse_reals(args.refs, "references")
    x = parse_reals(args.locs, "locations")
    if len(x) != len(r):
        raise UsageError(f"{len(x)} locations for {len(r)} references")
    cost = parse_cost(args.cost)
    ok, w = is_equilibrium_exact(x, r, cost, tol=args.tol)
    gw = falsify_on_grid(x, r, cost, args.grid)
    g = payoff(x, r, cost)
    doc = {
        "command": "check",
        "references": r,
        "locations": x,
        "cost": cost.label,
        "payoffs": list(g),
        "equilibrium": ok,
        "witness": _witness_doc(w),
        "grid_size": args.grid,
        "grid_witness": _witness_doc(gw),
        # A grid hit always implies a genuine deviation, so this must never be false.
        "agree": not (ok and gw is not None),
    }
    rows = [(k + 1, r[k], x[k], g[k]) for k in range(len(r))]
    return doc, (("player", "reference", "location", "payoff"), rows), EXIT_OK if ok else EXIT_NONE


def cmd_prob(args) -> tuple:
    cost = parse_cost(args.cost)
    if args.draws < 1:
        raise UsageError("--draws must be at least 1")
    est = analysis.monte_carlo_existence(args.n, cost, args.draws, args.seed, workers=args.workers)
    closed = None
    if args.n == 2 and cost.kind == "quadratic":
        closed = analysis.existence_probability_duopoly(cost.c)
    doc = {
        "command": "prob",
        "n": args.n,
        "cost": cost.label,
        "draws": est.draws,
        "seed": est.seed,
        "hits": est.hits,
        "p_hat": est.p_hat,
        "stderr": est.stderr,
        "closed_form": closed,
    }
    header = ("n", "cost", "draws", "seed", "hits", "p_hat", "stderr", "closed_form")
    return doc, (header, [tuple(doc[k] for k in header)]), EXIT_OK


def _parse_fix(items, n) -> dict:
    fixed = {}
    for item in items or ():
        k, sep, v = item.partition("=")
        try:
            idx, val = int(k) - 1, float(v)
        except ValueError:
            raise UsageError(f"malformed --fix {item!r}; use index=value") from None
        if not sep or not 0 <= idx < n:
            raise UsageError(f"--fix index out of range in {item!r}")
        if not 0.0 <= val <= 1.0:
            raise UsageError(f"--fix value outside [0, 1] in {item!r}")
        fixed[idx] = val
    return fixed


def cmd_phase(args) -> tuple:
    cost = parse_cost(args.cost)
    n = args.n
    fixed = _parse_fix(args.fix, n)
    if args.axes:
        try:
            axes = tuple(int(t) - 1 for t in args.axes.split(","))
        except ValueError:
            raise UsageError(f"malformed --axes {args.axes!r}") from None
    else:
        axes = tuple(k for k in range(n) if k not in fixed)
    if len(axes) != 2 or len(set(axes)) != 2 or set(axes) | set(fixed) != set(range(n)) \
            or set(axes) & set(fixed):
        raise UsageError("phase needs exactly two free axes; fix every other reference with --fix")
    if args.res < 1:
        raise UsageError("--res must be positive")
    grid = analysis.phase_grid(n, cost, args.res, axes=axes, fixed=fixed)
    body = grid.to_csv()
    doc = {
        "command": "phase",
        "n": n,
        "cost": cost.label,
        "axes": [a + 1 for a in axes],
        "fixed": {str(k + 1): v for k, v in sorted(fixed.items())},
        "resolution": args.res,
        "rows": args.res * args.res,
        "counts": grid.counts(),
        "out": args.out,
    }
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(body)
        return doc, (("class", "cells"), sorted(grid.counts().items())), EXIT_OK
    return doc, body, EXIT_OK


def cmd_threshold(args) -> tuple:
    doc = {"command": "threshold"}
    if args.regular is not None:
        doc["n"] = args.regular
        doc["regular_threshold"] = analysis.regular_threshold(args.regular)
    if args.refs:
        r = parse_reals(args.refs, "references")
        if len(r) != 2:
            raise UsageError("threshold --refs takes exactly two references")
        lo, hi = analysis.cost_thresholds_duopoly(*r)
        doc["references"] = r
        doc["c_low"] = lo
        doc["c_high"] = hi
    if len(doc) == 1:
        raise UsageError("threshold needs --refs r1,r2 and/or --regular n")
    keys = [k for k in doc if k != "command"]
    return doc, (tuple(keys), [tuple(doc[k] for k in keys)]), EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="locgame",
                                description="Equilibria of location games with reference points.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, cost=True):
        if cost:
            sp.add_argument("--cost", required=True, help="quad:c | hetero:c1,c2 | power:p,a")
        sp.add_argument("--format", choices=("text", "json", "csv"), default="text")

    s = sub.add_parser("solve", help="construct and certify the equilibrium")
    s.add_argument("--refs", required=True, help="comma-separated references")
    s.add_argument("--tol", type=float, default=1e-9, help="oracle tolerance")
    common(s)
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("check", help="test an arbitrary location profile")
    c.add_argument("--refs", required=True)
    c.add_argument("--locs", required=True)
    c.add_argument("--tol", type=float, default=1e-9)
    c.add_argument("--grid", type=int, default=2001, help="grid falsifier size")
    common(c)
    c.set_defaults(func=cmd_check)

    pr = sub.add_parser("prob", help="Monte Carlo existence probability")
    pr.add_argument("--n", type=int, required=True)
    pr.add_argument("--draws", type=int, default=100000)
    pr.add_argument("--seed", type=int, default=0)
    pr.add_argument("--workers", type=int, default=1)
    common(pr)
    pr.set_defaults(func=cmd_prob)

    ph = sub.add_parser("phase", help="phase-diagram grid as CSV")
    ph.add_argument("--n", type=int, required=True)
    ph.add_argument("--res", type=int, default=256)
    ph.add_argument("--fix", action="append", metavar="K=V", help="fix reference K (1-based)")
    ph.add_argument("--axes", help="the two varying references, 1-based, e.g. 1,2")
    ph.add_argument("--out", help="write the grid here instead of standard output")
    common(ph)
    ph.set_defaults(func=cmd_phase)

    t = sub.add_parser("threshold", help="cost thresholds")
    t.add_argument("--refs", help="two references for the duopoly thresholds")
    t.add_argument("--regular", type=int, help="n for evenly spaced references")
    common(t, cost=False)
    t.set_defaults(func=cmd_threshold)
    return p


def render(doc: dict, table, fmt: str) -> str:
    if isinstance(table, str) and fmt != "json":
        return table.rstrip("\n")
    if fmt == "json":
        return to_json(doc)
    if fmt == "csv":
        return to_csv(*table)
    return to_text(doc)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        doc, table, code = args.func(args)
    except (UsageError, LocgameError, ValueError) as exc:
        print(f"locgame: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    sys.stdout.write(render(doc, table, args.format) + "\n")
    return code
