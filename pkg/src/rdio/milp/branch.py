"""Branch-and-bound over binary variables, plus an enumeration oracle."""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import InputError
from .model import MilpModel
from .simplex import solve_lp

BRUTE_FORCE_LIMIT = 20


@dataclass
class SolverOptions:
    int_tol: float = 1e-6
    gap_tol: float = 0.0
    node_limit: Optional[int] = None
    time_limit: Optional[float] = None
    branch_rule: str = "most_fractional"  # or first_fractional
    backend: str = "builtin"  # or highs
    verbose: bool = False

    def __post_init__(self):
        if self.int_tol <= 0 or self.gap_tol < 0:
            raise InputError("tolerances must be positive")
        if self.branch_rule not in ("most_fractional", "first_fractional"):
            raise InputError(f"unknown branch rule {self.branch_rule!r}")
        if self.backend not in ("builtin", "highs"):
            raise InputError(f"unknown backend {self.backend!r}")


@dataclass
class MilpSolution:
    status: str  # optimal | infeasible | unbounded | limit_reached
    x: Optional[np.ndarray] = None
    objective: Optional[float] = None
    bound: Optional[float] = None
    nodes: int = 0
    lp_count: int = 0
    wall_time: float = 0.0
    backend: str = "builtin"
    stats: dict = field(default_factory=dict)

    @property
    def has_solution(self) -> bool:
        return self.x is not None


def _better(a, b, maximize):
    return a > b if maximize else a < b


def _polish(milp: MilpModel, x, lower, upper):
    """Fix binaries at their rounded values and re-solve the continuous part."""
    lo = np.array(lower, float)
    hi = np.array(upper, float)
    b = milp.binaries
    rounded = np.round(x[b])
    lo[b] = rounded
    hi[b] = rounded
    sol = solve_lp(milp.relaxation(lo, hi))
    if sol.status != "optimal":
        return None
    out = sol.x.copy()
    out[b] = rounded
    return out


def solve_milp(milp: MilpModel, options: Optional[SolverOptions] = None,
               incumbent=None) -> MilpSolution:
    """Exact depth-first branch and bound; ``incumbent`` is an optional warm start."""
    options = options or SolverOptions()
    if options.backend == "highs":
        from .highs import solve_highs
        return solve_highs(milp, options, incumbent)

    start = time.perf_counter()
    maximize = milp.maximize
    sign = 1.0 if maximize else -1.0
    lp = milp.relaxation()
    bins = milp.binaries
    best_x, best_val = None, None
    if incumbent is not None:
        inc = np.asarray(incumbent, float)
        if milp.residual(inc, options.int_tol) <= 1e-7:
            best_x, best_val = inc.copy(), milp.evaluate(inc)

    nodes = 0
    lp_count = 0

    def prune_level():
        if best_val is None:
            return None
        return best_val + sign * max(1e-9, options.gap_tol * abs(best_val))

    def evaluate(lo, hi):
        nonlocal lp_count
        lp.lower, lp.upper = lo, hi
        lp_count += 1
        return solve_lp(lp)

    root = evaluate(np.array(milp.lower), np.array(milp.upper))
    if root.status == "infeasible":
        return MilpSolution("infeasible", nodes=1, lp_count=lp_count,
                            wall_time=time.perf_counter() - start)
    if root.status == "unbounded":
        return MilpSolution("unbounded", nodes=1, lp_count=lp_count,
                            wall_time=time.perf_counter() - start)
    stack = [(root.objective, np.array(milp.lower), np.array(milp.upper), root)]
    limited = False
    while stack:
        if options.node_limit is not None and nodes >= options.node_limit:
            limited = True
            break
        if options.time_limit is not None and time.perf_counter() - start > options.time_limit:
            limited = True
            break
        bound, lo, hi, sol = stack.pop()
        nodes += 1
        level = prune_level()
        if level is not None and sign * (bound - level) <= 0:
            continue
        x = sol.x
        frac = np.abs(x[bins] - np.round(x[bins]))
        fractional = np.flatnonzero(frac > options.int_tol)
        if fractional.size == 0:
            cand = _polish(milp, x, lo, hi)
            if cand is not None:
                val = milp.evaluate(cand)
                if best_val is None or _better(val, best_val, maximize):
                    best_x, best_val = cand, val
            continue
        if options.branch_rule == "most_fractional":
            pick = fractional[np.argmax(frac[fractional])]
        else:
            pick = fractional[0]
        j = bins[pick]
        children = []
        for v in (0.0, 1.0):
            clo, chi = lo.copy(), hi.copy()
            clo[j] = chi[j] = v
            child = evaluate(clo, chi)
            if child.status == "optimal":
                children.append((child.objective, clo, chi, child))
        # push the weaker child first so the stronger bound is explored next
        children.sort(key=lambda c: sign * c[0])
        level = prune_level()
        for ch in children:
            if level is None or sign * (ch[0] - level) > 0:
                stack.append(ch)

    wall = time.perf_counter() - start
    open_bound = None
    if limited and stack:
        open_bound = (max if maximize else min)(s[0] for s in stack)
    if limited:
        status = "limit_reached"
        bound = open_bound if open_bound is not None else best_val
    elif best_x is None:
        status, bound = "infeasible", None
    else:
        status, bound = "optimal", best_val
    return MilpSolution(status, best_x, best_val, bound, nodes, lp_count, wall)


def brute_force_milp(milp: MilpModel) -> MilpSolution:
    """Enumerate every binary assignment and solve the remaining LP (test oracle)."""
    bins = milp.binaries
    if bins.size > BRUTE_FORCE_LIMIT:
        raise InputError(f"brute force refused: {bins.size} binaries > {BRUTE_FORCE_LIMIT}")
    start = time.perf_counter()
    lp = milp.relaxation()
    base_lo = np.array(milp.lower)
    base_hi = np.array(milp.upper)
    best_x, best_val = None, None
    unbounded = False
    count = 0
    for combo in itertools.product((0.0, 1.0), repeat=bins.size):
        lo, hi = base_lo.copy(), base_hi.copy()
        vals = np.array(combo)
        if np.any(vals < base_lo[bins]) or np.any(vals > base_hi[bins]):
            continue
        lo[bins] = vals
        hi[bins] = vals
        lp.lower, lp.upper = lo, hi
        sol = solve_lp(lp)
        count += 1
        if sol.status == "unbounded":
            unbounded = True
            break
        if sol.status != "optimal":
            continue
        if best_val is None or _better(sol.objective, best_val, milp.maximize):
            best_x, best_val = sol.x, sol.objective
    wall = time.perf_counter() - start
    if unbounded:
        return MilpSolution("unbounded", lp_count=count, wall_time=wall)
    if best_x is None:
        return MilpSolution("infeasible", lp_count=count, wall_time=wall)
    return MilpSolution("optimal", best_x, best_val, best_val, 2 ** bins.size, count, wall)
