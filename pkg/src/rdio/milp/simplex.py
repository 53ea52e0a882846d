"""Bounded-variable primal simplex on a dense tableau.

Rows are converted to equalities with one slack per row, and variables keep
their explicit bounds (no free-variable splitting).  Phase one minimises the
sum of artificial variables, created only for rows that the crash basis
cannot satisfy with a slack.  Pricing is Dantzig's rule until a run of
degenerate pivots is seen, after which Bland's smallest-index rule takes over
until the objective strictly improves again.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..errors import InputError, NumericalError

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
PIVOT_TOL = 1e-9
DEGENERATE_RUN = 50
REFACTOR_EVERY = 100

_SENSES = ("<=", ">=", "==")

# nonbasic status codes
AT_LOWER, AT_UPPER, AT_ZERO, BASIC = 0, 1, 2, 3


@dataclass
class LpModel:
    """``min`` (or ``max``) ``c @ x`` subject to ``A x (sense) rhs`` and bounds."""

    c: np.ndarray
    A: np.ndarray
    senses: Sequence[str]
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    maximize: bool = False

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        n = self.c.size
        self.A = np.asarray(self.A, dtype=float).reshape(-1, n)
        self.rhs = np.asarray(self.rhs, dtype=float).reshape(-1)
        self.lower = np.broadcast_to(np.asarray(self.lower, float), (n,)).copy()
        self.upper = np.broadcast_to(np.asarray(self.upper, float), (n,)).copy()
        self.senses = list(self.senses)
        if len(self.senses) != self.A.shape[0] or self.rhs.size != self.A.shape[0]:
            raise InputError("row count mismatch between A, senses and rhs")
        bad = [s for s in self.senses if s not in _SENSES]
        if bad:
            raise InputError(f"unknown row sense {bad[0]!r}")
        if np.any(self.lower > self.upper):
            raise InputError("variable lower bound exceeds upper bound")

    @property
    def num_vars(self) -> int:
        return self.c.size

    @property
    def num_rows(self) -> int:
        return self.A.shape[0]


@dataclass
class LpSolution:
    status: str  # optimal | infeasible | unbounded
    x: Optional[np.ndarray] = None
    objective: Optional[float] = None
    duals: Optional[np.ndarray] = None
    reduced_costs: Optional[np.ndarray] = None
    ray: Optional[np.ndarray] = None
    iterations: int = 0
    info: dict = field(default_factory=dict)


def dual_objective(model: LpModel, duals: np.ndarray) -> float:
    """Lagrangian dual value of ``duals`` for ``model``, computed from scratch.

    Uses the sign convention of :func:`solve_lp`: the returned dual vector
    satisfies ``c = A.T @ y + r`` for reduced costs ``r``.  Each reduced cost is
    charged at the bound that makes the Lagrangian minimal (maximal when
    maximising); an infinite bound with a nonzero charge yields ``-inf``
    (``+inf``).
    """
    y = np.asarray(duals, float)
    sign = -1.0 if model.maximize else 1.0
    c = sign * model.c
    ys = sign * y
    r = c - model.A.T @ ys
    total = float(ys @ model.rhs)
    for j, rj in enumerate(r):
        if abs(rj) <= 1e-12:
            continue
        bound = model.lower[j] if rj > 0 else model.upper[j]
        if not np.isfinite(bound):
            return -sign * np.inf
        total += rj * bound
    return sign * total


class _Tableau:
    def __init__(self, model: LpModel):
        A, rhs = model.A, model.rhs
        k, n = A.shape
        self.n, self.k = n, k
        slack_lo = np.zeros(k)
        slack_hi = np.zeros(k)
        for i, s in enumerate(model.senses):
            if s == "<=":
                slack_hi[i] = np.inf
            elif s == ">=":
                slack_lo[i] = -np.inf
        lo = np.concatenate([model.lower, slack_lo])
        hi = np.concatenate([model.upper, slack_hi])
        cols = np.hstack([A, np.eye(k)])

        # crash: structurals at a finite bound (or zero), slacks basic when possible
        x = np.zeros(n + k)
        status = np.full(n + k, AT_ZERO)
        for j in range(n):
            if np.isfinite(lo[j]):
                x[j], status[j] = lo[j], AT_LOWER
            elif np.isfinite(hi[j]):
                x[j], status[j] = hi[j], AT_UPPER
        resid = rhs - A @ x[:n]
        basis = np.empty(k, dtype=int)
        art_rows, art_sign = [], []
        for i in range(k):
            j = n + i
            if lo[j] - FEAS_TOL <= resid[i] <= hi[j] + FEAS_TOL:
                x[j] = min(max(resid[i], lo[j]), hi[j])
                status[j] = BASIC
                basis[i] = j
            else:
                val = lo[j] if resid[i] < lo[j] else hi[j]
                x[j] = val
                status[j] = AT_LOWER if val == lo[j] else AT_UPPER
                if lo[j] == hi[j]:
                    status[j] = AT_LOWER
                art_rows.append(i)
                art_sign.append(1.0 if resid[i] - val >= 0 else -1.0)
        na = len(art_rows)
        art_cols = np.zeros((k, na))
        for t, (i, sg) in enumerate(zip(art_rows, art_sign)):
            art_cols[i, t] = sg
            basis[i] = n + k + t
        self.cols = np.hstack([cols, art_cols])
        self.lo = np.concatenate([lo, np.zeros(na)])
        self.hi = np.concatenate([hi, np.full(na, np.inf)])
        self.x = np.concatenate([x, np.zeros(na)])
        self.status = np.concatenate([status, np.full(na, BASIC)])
        for t, i in enumerate(art_rows):
            self.x[n + k + t] = abs(resid[i] - x[n + i])
        self.num_art = na
        self.art_start = n + k
        self.rhs = rhs
        self.basis = basis
        self.pivots = 0
        self.refactor()

    # -- linear algebra -------------------------------------------------
    def refactor(self):
        B = self.cols[:, self.basis]
        try:
            self.T = np.linalg.solve(B, self.cols)
        except np.linalg.LinAlgError as exc:
            raise NumericalError("singular basis during refactorisation") from exc
        nonbasic = self.status != BASIC
        r = self.rhs - self.cols[:, nonbasic] @ self.x[nonbasic]
        self.x[self.basis] = np.linalg.solve(B, r)
        self.T[np.abs(self.T) < 1e-14] = 0.0

    def reduced_costs(self, cost):
        return cost - cost[self.basis] @ self.T

    # -- one simplex phase ----------------------------------------------
    def run(self, cost, max_iter):
        bland = False
        degenerate = 0
        it = 0
        while True:
            if it >= max_iter:
                raise NumericalError(f"simplex iteration cap {max_iter} reached")
            d = self.reduced_costs(cost)
            st = self.status
            free = self.lo < self.hi
            elig = np.zeros_like(free)
            elig |= (st == AT_LOWER) & (d < -OPT_TOL) & free
            elig |= (st == AT_UPPER) & (d > OPT_TOL) & free
            elig |= (st == AT_ZERO) & (np.abs(d) > OPT_TOL)
            cand = np.flatnonzero(elig)
            if cand.size == 0:
                return "optimal", None
            if bland:
                j = cand[0]
            else:
                j = cand[np.argmax(np.abs(d[cand]))]
            direction = 1.0 if d[j] < 0 else -1.0
            alpha = self.T[:, j]
            delta = direction * alpha

            t_best = np.inf
            r_best = -1
            xb = self.x[self.basis]
            lob = self.lo[self.basis]
            hib = self.hi[self.basis]
            dec = delta > PIVOT_TOL
            inc = delta < -PIVOT_TOL
            ratios = np.full(self.k, np.inf)
            with np.errstate(invalid="ignore", divide="ignore"):
                ratios[dec] = (xb[dec] - lob[dec]) / delta[dec]
                ratios[inc] = (hib[inc] - xb[inc]) / (-delta[inc])
            ratios[np.isnan(ratios)] = np.inf
            ratios = np.maximum(ratios, 0.0)
            if np.isfinite(ratios).any():
                t_best = ratios.min()
                ties = np.flatnonzero(ratios <= t_best + 1e-12)
                if bland:
                    r_best = ties[np.argmin(self.basis[ties])]
                else:
                    r_best = ties[np.argmax(np.abs(delta[ties]))]
            t_flip = self.hi[j] - self.lo[j]

            if not np.isfinite(t_best) and not np.isfinite(t_flip):
                ray = np.zeros(self.cols.shape[1])
                ray[j] = direction
                ray[self.basis] = -delta
                return "unbounded", ray

            step = min(t_best, t_flip)
            if step <= 1e-12:
                degenerate += 1
                if degenerate > DEGENERATE_RUN:
                    bland = True
            else:
                degenerate = 0
                bland = False

            self.x[self.basis] -= step * delta
            self.x[j] += direction * step
            if t_flip <= t_best:
                self.status[j] = AT_UPPER if direction > 0 else AT_LOWER
                self.x[j] = self.hi[j] if direction > 0 else self.lo[j]
            else:
                leaving = self.basis[r_best]
                if delta[r_best] > 0:
                    self.x[leaving] = self.lo[leaving]
                    self.status[leaving] = AT_LOWER
                else:
                    self.x[leaving] = self.hi[leaving]
                    self.status[leaving] = AT_UPPER
                self._pivot(r_best, j)
            it += 1

    def _pivot(self, r, j):
        T = self.T
        piv = T[r, j]
        T[r] /= piv
        col = T[:, j].copy()
        col[r] = 0.0
        nz = np.flatnonzero(col)
        if nz.size:
            T[nz] -= np.outer(col[nz], T[r])
        self.basis[r] = j
        self.status[j] = BASIC
        self.pivots += 1
        if self.pivots % REFACTOR_EVERY == 0:
            self.refactor()


def solve_lp(model: LpModel, max_iter: int = 50_000) -> LpSolution:
    """Solve ``model`` exactly up to floating-point tolerances.

    The returned ``duals`` follow the convention ``c = A.T @ y + r`` where
    ``r`` are the reduced costs of the structural variables, so strong duality
    reads ``c @ x == dual_objective(model, y)``.
    """
    n, k = model.num_vars, model.num_rows
    if k == 0:
        return _solve_bounds_only(model)
    tab = _Tableau(model)
    sign = -1.0 if model.maximize else 1.0
    big_n = tab.cols.shape[1]
    iters = 0

    if tab.num_art:
        cost1 = np.zeros(big_n)
        cost1[tab.art_start:] = 1.0
        status, _ = tab.run(cost1, max_iter)
        iters += tab.pivots
        tab.refactor()
        infeas = tab.x[tab.art_start:].sum()
        scale = 1.0 + np.abs(model.rhs).max(initial=0.0)
        if infeas > 1e-8 * scale:
            return LpSolution("infeasible", iterations=tab.pivots,
                              info={"phase_one_residual": float(infeas)})
        # artificials are pinned at zero from here on
        tab.hi[tab.art_start:] = 0.0
        tab.x[tab.art_start:] = np.where(
            tab.status[tab.art_start:] == BASIC, tab.x[tab.art_start:], 0.0)
        nonbasic_art = tab.status[tab.art_start:] != BASIC
        tab.status[tab.art_start:][nonbasic_art] = AT_LOWER

    cost2 = np.zeros(big_n)
    cost2[:n] = sign * model.c
    status, ray = tab.run(cost2, max_iter)
    tab.refactor()
    if status == "unbounded":
        return LpSolution("unbounded", ray=ray[:n].copy(), iterations=tab.pivots)

    x = tab.x[:n].copy()
    # snap nonbasic structurals exactly onto their bounds
    for j in range(n):
        if tab.status[j] == AT_LOWER:
            x[j] = model.lower[j]
        elif tab.status[j] == AT_UPPER:
            x[j] = model.upper[j]
        elif tab.status[j] == BASIC:
            x[j] = min(max(x[j], model.lower[j]), model.upper[j])
    binv = tab.T[:, n:n + k]
    y_min = cost2[tab.basis] @ binv
    r = sign * model.c - model.A.T @ y_min
    return LpSolution(
        "optimal",
        x=x,
        objective=float(model.c @ x),
        duals=sign * y_min,
        reduced_costs=sign * r,
        iterations=tab.pivots,
    )


def _solve_bounds_only(model: LpModel) -> LpSolution:
    sign = -1.0 if model.maximize else 1.0
    c = sign * model.c
    x = np.zeros(model.num_vars)
    for j, cj in enumerate(c):
        if cj > 0:
            x[j] = model.lower[j]
        elif cj < 0:
            x[j] = model.upper[j]
        else:
            lo, hi = model.lower[j], model.upper[j]
            x[j] = lo if np.isfinite(lo) else (hi if np.isfinite(hi) else 0.0)
        if not np.isfinite(x[j]):
            ray = np.zeros(model.num_vars)
            ray[j] = -np.sign(cj)
            return LpSolution("unbounded", ray=ray)
    return LpSolution("optimal", x=x, objective=float(model.c @ x),
                      duals=np.zeros(0), reduced_costs=model.c.copy())


def max_residual(model: LpModel, x: np.ndarray) -> float:
    """Largest violation of any row or bound of ``model`` at ``x``."""
    x = np.asarray(x, float)
    worst = 0.0
    if model.num_rows:
        ax = model.A @ x
        for i, s in enumerate(model.senses):
            if s == "<=":
                v = ax[i] - model.rhs[i]
            elif s == ">=":
                v = model.rhs[i] - ax[i]
            else:
                v = abs(ax[i] - model.rhs[i])
            worst = max(worst, v)
    worst = max(worst, float(np.max(model.lower - x, initial=0.0)))
    worst = max(worst, float(np.max(x - model.upper, initial=0.0)))
    return worst
