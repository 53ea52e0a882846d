"""Convex-hull membership, well-posedness checks, preferred solution, tangent half-space."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateGradientError, InputError, NumericalError, UnsupportedError
from .milp.simplex import LpModel, solve_lp
from .model import Dataset, Halfspace, Objective, Region

HULL_TOL = 1e-9
FW_GAP_TOL = 1e-6
FW_MAX_ITER = 10_000


def _as_points(points) -> np.ndarray:
    P = np.asarray(points, dtype=float)
    if P.ndim == 1:
        P = P.reshape(1, -1)
    if P.size == 0 or P.shape[0] == 0:
        raise InputError("point set is empty")
    return P


def hull_weights(x, points, tol: float = HULL_TOL) -> Optional[np.ndarray]:
    """Convex weights reproducing ``x`` from ``points`` within ``tol``, or None."""
    P = _as_points(points)
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != P.shape[1]:
        raise InputError(f"dimension mismatch: point has {x.size}, set has {P.shape[1]}")
    n = P.shape[0]
    slack = tol * (1.0 + max(np.abs(x).max(initial=0.0), np.abs(P).max()))
    # two-sided coordinate rows keep the LP well defined at tol = 0 as well
    A = np.vstack([P.T, P.T, np.ones((1, n))])
    rhs = np.r_[x + slack, x - slack, 1.0]
    senses = ["<="] * P.shape[1] + [">="] * P.shape[1] + ["=="]
    sol = solve_lp(LpModel(np.zeros(n), A, senses, rhs, np.zeros(n), np.full(n, np.inf)))
    if sol.status != "optimal":
        return None
    return sol.x


def hull_membership(x, points, tol: float = HULL_TOL) -> bool:
    """True iff ``x`` is a convex combination of ``points`` (relative tolerance)."""
    return hull_weights(x, points, tol) is not None


# ----------------------------------------------------------------------


@dataclass
class WellPosednessReport:
    accepted_feasible_for_known: list = field(default_factory=list)
    rejected_in_hull: list = field(default_factory=list)
    template_feasible: list = field(default_factory=list)

    @property
    def overall(self) -> bool:
        return (all(self.accepted_feasible_for_known) and not any(self.rejected_in_hull)
                and all(self.template_feasible))

    def failures(self) -> list:
        out = []
        for i, ok in enumerate(self.template_feasible):
            if not ok:
                out.append(("a", i, f"template {i} admits no parameters keeping accepted points feasible"))
        for i, ok in enumerate(self.accepted_feasible_for_known):
            if not ok:
                out.append(("b", i, f"accepted point {i} violates a known constraint"))
        for i, bad in enumerate(self.rejected_in_hull):
            if bad:
                out.append(("c", i, f"rejected point {i} lies in the convex hull of accepted points"))
        return out

    def to_dict(self) -> dict:
        return {
            "accepted_feasible_for_known": list(map(bool, self.accepted_feasible_for_known)),
            "rejected_in_hull": list(map(bool, self.rejected_in_hull)),
            "template_feasible": list(map(bool, self.template_feasible)),
            "overall": self.overall,
        }


def template_feasible(template, accepted) -> bool:
    """Feasibility LP over the parameter box: ``q @ phi(x^k) >= 0`` for every accepted point."""
    F = np.array([template.features(x) for x in accepted]).reshape(len(accepted), -1)
    d = template.param_dim
    sol = solve_lp(LpModel(np.zeros(d), F, [">="] * F.shape[0], np.zeros(F.shape[0]),
                           template.lower, template.upper))
    return sol.status == "optimal"


def check_well_posed(dataset: Dataset, known: Region, templates: Sequence = (),
                     tol: float = 1e-6) -> WellPosednessReport:
    """Evaluate every part of the well-posedness assumption; never raises on failure.

    The tangent half-space of ``known`` (if any) is ignored here; accepted
    points satisfy it by construction of the preferred solution.
    """
    acc = dataset.accepted
    if acc.shape[0] == 0:
        raise InputError("well-posedness needs at least one accepted point")
    body = known.without_tangent()
    rep = WellPosednessReport()
    rep.template_feasible = [template_feasible(t, acc) for t in templates]
    rep.accepted_feasible_for_known = [body.contains(x, tol) for x in acc]
    rep.rejected_in_hull = [hull_membership(x, acc) for x in dataset.rejected]
    return rep


# ----------------------------------------------------------------------


def preferred_solution(accepted, objective: Objective, tol: float = FW_GAP_TOL,
                       max_iter: int = FW_MAX_ITER):
    """Minimiser of ``objective`` over the hull of ``accepted`` and its convex weights.

    Linear objectives pick the best input point (lowest index on ties).
    Quadratic objectives run away-step Frank-Wolfe on the weight simplex with
    exact line search, followed by an exact solve on the final active face.
    """
    P = _as_points(accepted)
    if not isinstance(objective, Objective):
        raise UnsupportedError("objective must be linear or convex quadratic")
    if P.shape[1] != objective.dim:
        raise InputError("objective and points differ in dimension")
    n = P.shape[0]
    vals = np.array([objective.value(p) for p in P])
    if objective.Q is None:
        k = int(np.argmin(vals))  # first index among ties
        w = np.zeros(n)
        w[k] = 1.0
        return P[k].copy(), w

    Q = objective.Q
    w = np.zeros(n)
    w[int(np.argmin(vals))] = 1.0
    x = P.T @ w
    gap = np.inf
    for _ in range(max_iter):
        gw = P @ objective.grad(x)
        s = int(np.argmin(gw))
        active = np.flatnonzero(w > 0)
        a = active[np.argmax(gw[active])]
        gap = float(gw @ w - gw[s])
        if gap <= tol * (1.0 + abs(objective.value(x))):
            break
        if gw[s] - gw @ w <= gw @ w - gw[a] or w[a] >= 1.0:
            dw = -w.copy()
            dw[s] += 1.0
            cap = 1.0
        else:
            dw = w.copy()
            dw[a] -= 1.0
            cap = w[a] / (1.0 - w[a])
        dx = P.T @ dw
        slope = float(objective.grad(x) @ dx)
        curv = float(dx @ Q @ dx)
        step = cap if curv <= 0 else min(cap, max(0.0, -slope / (2.0 * curv)))
        w = w + step * dw
        w[np.abs(w) < 1e-15] = 0.0
        w = np.maximum(w, 0.0)
        w /= w.sum()
        x = P.T @ w
    else:
        raise NumericalError("preferred solution did not converge", residual=gap)
    w, x = _face_polish(P, objective, w, x)
    return x, w


def _face_polish(P, objective, w, x):
    """Solve the equality-constrained quadratic on the support of ``w`` exactly."""
    S = np.flatnonzero(w > 0)
    if S.size < 2:
        return w, x
    Ps = P[S]
    k = S.size
    H = 2.0 * Ps @ objective.Q @ Ps.T
    K = np.zeros((k + 1, k + 1))
    K[:k, :k] = H
    K[:k, k] = 1.0
    K[k, :k] = 1.0
    rhs = np.r_[-(Ps @ objective.c), 1.0]
    sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
    ws = sol[:k]
    if np.any(ws < 0) or abs(ws.sum() - 1.0) > 1e-12:
        return w, x
    cand_w = np.zeros_like(w)
    cand_w[S] = ws
    cand_x = P.T @ cand_w
    if objective.value(cand_x) <= objective.value(x) + 1e-15 * (1 + abs(objective.value(x))):
        return cand_w, cand_x
    return w, x


def tangent_halfspace(objective: Objective, x0) -> Halfspace:
    """``{x : grad f(x0) @ x >= grad f(x0) @ x0}``."""
    x0 = np.asarray(x0, float)
    g = objective.grad(x0)
    if np.linalg.norm(g, np.inf) <= 1e-12 * (1.0 + np.abs(objective.c).max(initial=0.0)):
        raise DegenerateGradientError(
            "gradient vanishes at x0; the tangent half-space is undefined")
    return Halfspace(g, float(g @ x0))


def sublevel_contains(objective: Objective, x0, x, tol: float = 0.0) -> bool:
    """``f(x) >= f(x0)``, optionally relaxed by ``tol * (1 + |f(x0)|)``."""
    f0 = objective.value(x0)
    return objective.value(x) >= f0 - tol * (1.0 + abs(f0))
