"""Reduced inverse model (RDIO) with the Separation Distance objective.

The constraint index set is ordered as

    inferred linear | inferred nonlinear | known linear (tangent last) | known nonlinear

and every per-(constraint, rejected point) family (``y``, ``p``) follows that
order along its first axis.  Distances ``d`` exist only for inferred rows.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import (AuditError, CertificateError, InputError, NumericalError,
                     UnsupportedError, WellPosednessError)
from .geometry import (check_well_posed, hull_membership, preferred_solution,
                       tangent_halfspace)
from .milp.branch import MilpSolution, SolverOptions, solve_milp
from .milp.model import MilpModel
from .milp.simplex import LpModel, solve_lp
from .model import (Dataset, LinearConstraint, NonlinearTemplate, Objective, Region,
                    is_nominal, optimal_at, template_from_spec)

NORMALIZATIONS = ("coefficient_box", "l1proxy")
CERT_TOL = 1e-8


@dataclass
class RdioConfig:
    """Inverse-model settings.

    ``epsilon`` and ``big_m`` accept ``"auto"`` (resolved from the data at
    build time).  ``cap_a`` bounds every inferred coefficient in magnitude.
    """

    num_linear: int = 1
    templates: Sequence[NonlinearTemplate] = ()
    epsilon: Union[float, str] = "auto"
    big_m: Union[float, str] = "auto"
    normalization: str = "coefficient_box"
    objective_metric: str = "separation_distance"
    cap_a: float = 1.0
    symmetry_breaking: bool = True
    warm_start: bool = True

    def __post_init__(self):
        self.templates = tuple(self.templates)
        if self.num_linear < 0 or self.num_linear + len(self.templates) < 1:
            raise InputError("at least one inferred constraint is required")
        for t in self.templates:
            if not isinstance(t, NonlinearTemplate):
                raise UnsupportedError("templates must be parameter-affine NonlinearTemplate objects")
        if self.normalization not in NORMALIZATIONS:
            raise InputError(f"unknown normalization {self.normalization!r}")
        if self.objective_metric != "separation_distance":
            raise UnsupportedError(f"unknown objective metric {self.objective_metric!r}")
        if self.epsilon != "auto" and not float(self.epsilon) > 0:
            raise InputError("epsilon must be positive")
        if self.big_m != "auto":
            if not float(self.big_m) > 0:
                raise InputError("big-M must be positive")
            if self.epsilon != "auto" and float(self.big_m) <= float(self.epsilon):
                raise InputError("big-M must exceed epsilon")
        if not self.cap_a > 0:
            raise InputError("cap_a must be positive")

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k != "templates"}
        specs = []
        for t in self.templates:
            if t.spec is None:
                raise UnsupportedError(f"template {t.name!r} has no serialisable spec")
            specs.append(t.spec)
        d["templates"] = specs
        return d

    @classmethod
    def from_dict(cls, d) -> "RdioConfig":
        d = dict(d)
        d["templates"] = [template_from_spec(s) for s in d.get("templates", [])]
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise InputError(f"unknown config keys: {sorted(extra)}")
        return cls(**d)


# ----------------------------------------------------------------------
# data-dependent constants


def data_box(points, inflate: float = 0.1):
    P = np.asarray(points, float)
    lo, hi = P.min(axis=0), P.max(axis=0)
    pad = inflate * (hi - lo)
    pad = np.where(pad > 0, pad, inflate * (1.0 + np.abs(lo)))
    return lo - pad, hi + pad


def default_epsilon(points) -> float:
    P = np.asarray(points, float)
    rng = float((P.max(axis=0) - P.min(axis=0)).max())
    return 1e-3 * (rng if rng > 0 else 1.0)


def auto_big_m(points, epsilon, cap_a=1.0, templates=()):
    """Big-M that keeps every relaxed row inactive, plus the magnitude cap on ``b``."""
    lo, hi = data_box(points)
    cap_b = cap_a * float(np.maximum(np.abs(lo), np.abs(hi)).sum()) + 1.0
    M = float((hi - lo).sum()) * cap_a + cap_b + epsilon
    for t in templates:
        qmax = np.maximum(np.abs(t.lower), np.abs(t.upper))
        for x in points:
            M = max(M, float(qmax @ np.abs(t.features(x))) + epsilon)
    return M, cap_b


def distance_bounds(acc, rej, n_lin, cap_a, templates, V, cap_b=None,
                    normalization="coefficient_box"):
    """Valid upper bounds on each inferred row's violation at each rejected point.

    For a linear row the bound is the optimal margin of the separation LP
    (largest ``b - a @ x^k`` over admissible rows keeping every accepted
    point feasible); for a template it is the analogous LP over its
    parameter box.  ``Z[k]`` bounds the per-point maximum, known rows
    included.
    """
    Km = len(rej)
    if cap_b is None:
        cap_b = cap_a * float(np.abs(np.vstack([acc, rej])).sum(axis=1).max()) + 1.0
    D = np.zeros((n_lin + len(templates), Km))
    signs = (1.0, -1.0) if normalization == "l1proxy" else (None,)
    for k, xk in enumerate(rej):
        if n_lin:
            best = 0.0
            for s in signs:
                r = _separator(acc, xk, cap_a, cap_b, s)
                if r is not None:
                    best = max(best, float(r[2]))
            D[:n_lin, k] = best
        for n, t in enumerate(templates):
            F = np.array([t.features(x) for x in acc])
            fk = t.features(xk)
            sol = solve_lp(LpModel(-fk, F, [">="] * len(F), np.zeros(len(F)),
                                   t.lower, t.upper, maximize=True))
            D[n_lin + n, k] = max(0.0, sol.objective) if sol.status == "optimal" else 0.0
    Z = np.zeros(Km)
    for k in range(Km):
        Z[k] = max(0.0, float(D[:, k].max(initial=0.0)), float(V[:, k].max(initial=0.0)))
    return D, Z


def append_tangent_halfspace(region: Region, objective: Objective, x0) -> Region:
    return region.with_tangent(tangent_halfspace(objective, x0))


def min_constraint_upper_bound(dataset: Dataset) -> int:
    return int((~dataset.labels).sum()) + 1


# ----------------------------------------------------------------------
# model construction


@dataclass
class RdioModel:
    """A compiled inverse model plus the context needed to read its solutions."""

    milp: MilpModel
    config: RdioConfig
    dataset: Dataset
    known: Region
    x0: np.ndarray
    objective: Objective
    epsilon: float
    big_m: float
    cap_b: float
    known_violation: np.ndarray  # (|L|+1+|N|, |K-|), b - a.x or -g at rejected points

    @property
    def n_lin(self) -> int:
        return self.config.num_linear

    @property
    def n_nl(self) -> int:
        return len(self.config.templates)

    @property
    def n_known_lin(self) -> int:
        return len(self.known.linear_rows)

    @property
    def n_known_nl(self) -> int:
        return len(self.known.nonlinear_rows)

    @property
    def n_rows_total(self) -> int:
        return self.n_lin + self.n_nl + self.n_known_lin + self.n_known_nl


def build_rdio(dataset: Dataset, known: Region, x0, objective: Objective,
               config: RdioConfig) -> RdioModel:
    """Compile the inverse MILP; appends the tangent half-space if ``known`` lacks it."""
    x0 = np.asarray(x0, float)
    if known.tangent is None:
        known = append_tangent_halfspace(known, objective, x0)
    if known.inferred_linear or known.inferred_nonlinear:
        raise InputError("known region must not contain inferred constraints")
    m = dataset.m
    if x0.size != m:
        raise InputError("x0 dimension does not match the dataset")
    acc, rej = dataset.accepted, dataset.rejected
    if acc.shape[0] == 0:
        raise InputError("at least one accepted observation is required")
    eps = default_epsilon(dataset.points) if config.epsilon == "auto" else float(config.epsilon)
    M_auto, cap_b = auto_big_m(dataset.points, eps, config.cap_a, config.templates)
    M = M_auto if config.big_m == "auto" else float(config.big_m)
    if M <= eps:
        raise InputError("big-M must exceed epsilon")
    cap_a = config.cap_a
    L, NT = config.num_linear, list(config.templates)
    kl, kn = known.linear_rows, known.nonlinear_rows
    nI = L + len(NT) + len(kl) + len(kn)
    Km = rej.shape[0]

    milp = MilpModel(name="rdio", maximize=True)
    a = milp.add_vars("a", (L, m), -cap_a, cap_a)
    b = milp.add_vars("b", (L,), -cap_b, cap_b)
    q = [milp.add_vars(f"q{n}", (t.param_dim,), 0.0, 0.0) for n, t in enumerate(NT)]
    for n, t in enumerate(NT):
        for j in range(t.param_dim):
            milp.lower[q[n][j]] = float(t.lower[j])
            milp.upper[q[n][j]] = float(t.upper[j])
    milp.index["q"] = q

    # constants for known rows at rejected points: violation v = b - a.x (or -g)
    V = np.zeros((len(kl) + len(kn), Km))
    for k, x in enumerate(rej):
        for i, c in enumerate(kl):
            V[i, k] = c.b - float(c.a @ x)
        for i, (t, qq) in enumerate(kn):
            V[len(kl) + i, k] = -float(qq @ t.features(x))

    D, Z = distance_bounds(acc, rej, L, cap_a, NT, V, cap_b, config.normalization)
    D = np.minimum(D, M)
    Z = np.minimum(Z, M)

    y = milp.add_vars("y", (nI, Km), binary=True) if Km else np.zeros((nI, 0), int)
    p = milp.add_vars("p", (nI, Km), binary=True) if Km else np.zeros((nI, 0), int)
    d = milp.add_vars("d", (L + len(NT), Km), 0.0, M) if Km else np.zeros((L + len(NT), 0), int)
    z = milp.add_vars("z", (Km,), 0.0, M) if Km else np.zeros(0, int)
    for k in range(Km):
        milp.upper[z[k]] = float(Z[k])
        for i in range(L + len(NT)):
            milp.upper[d[i, k]] = float(D[i, k])
            if D[i, k] < eps:
                milp.lower[y[i, k]] = 1.0  # this row can never cut point k by eps
    # known rows that a rejected point does not violate by epsilon must stay "satisfied"
    for i in range(len(kl) + len(kn)):
        for k in range(Km):
            if V[i, k] < eps:
                milp.lower[y[L + len(NT) + i, k]] = 1.0

    # accepted points satisfy every inferred row
    for k, x in enumerate(acc):
        for l in range(L):
            milp.add_row([(a[l, j], x[j]) for j in range(m)] + [(b[l], -1.0)], ">=", 0.0,
                         "accept_linear")
    for k, x in enumerate(acc):
        for n, t in enumerate(NT):
            phi = t.features(x)
            milp.add_row(list(zip(q[n], phi)), ">=", 0.0, "accept_nonlinear")

    feats = [[t.features(x) for x in rej] for t in NT]
    for k, x in enumerate(rej):
        # a rejected point violates row i by at least eps unless y[i, k] = 1
        for l in range(L):
            milp.add_row([(a[l, j], x[j]) for j in range(m)] + [(b[l], -1.0), (y[l, k], -M)],
                         "<=", -eps, "reject_inferred_linear")
        for i, c in enumerate(kl):
            Mi = max(M, -V[i, k] + eps)
            milp.add_row([(y[L + len(NT) + i, k], -Mi)], "<=", V[i, k] - eps,
                         "reject_known_linear")
        for n in range(len(NT)):
            milp.add_row(list(zip(q[n], feats[n][k])) + [(y[L + n, k], -M)], "<=", -eps,
                         "reject_inferred_nonlinear")
        for i in range(len(kn)):
            r = len(kl) + i
            Mi = max(M, -V[r, k] + eps)
            milp.add_row([(y[L + len(NT) + r, k], -Mi)], "<=", V[r, k] - eps,
                         "reject_known_nonlinear")
        milp.add_row([(y[i, k], 1.0) for i in range(nI)], "<=", nI - 1, "cover")

    # separation distance
    for k, x in enumerate(rej):
        for i in range(L + len(NT)):
            if i < L:
                # viol = b - a.x
                viol = [(b[i], 1.0)] + [(a[i, j], -x[j]) for j in range(m)]
            else:
                n = i - L
                viol = [(q[n][j], -feats[n][k][j]) for j in range(NT[n].param_dim)]
            neg = [(v, -c) for v, c in viol]
            milp.add_row([(d[i, k], 1.0)] + neg, ">=", 0.0, "dist_lower")
            milp.add_row([(d[i, k], 1.0)] + neg + [(y[i, k], -M)], "<=", 0.0, "dist_upper")
            milp.add_row([(d[i, k], 1.0), (y[i, k], D[i, k])], "<=", D[i, k], "dist_off")
            milp.add_row([(d[i, k], 1.0), (y[i, k], eps)], ">=", eps, "dist_on")
            milp.add_row([(z[k], 1.0), (d[i, k], -1.0), (p[i, k], -Z[k])], "<=", 0.0, "max_link")
            milp.add_row([(p[i, k], 1.0), (y[i, k], -1.0)], ">=", 0.0, "pick_link")
        for r in range(len(kl) + len(kn)):
            i = L + len(NT) + r
            Mr = Z[k] + max(0.0, -V[r, k])
            milp.add_row([(z[k], 1.0), (p[i, k], -Mr)], "<=", V[r, k], "max_link_known")
            milp.add_row([(p[i, k], 1.0), (y[i, k], -1.0)], ">=", 0.0, "pick_link")
        milp.add_row([(p[i, k], 1.0) for i in range(nI)], "<=", nI - 1, "pick_count")

    # normalization
    if config.normalization == "l1proxy":
        dp = milp.add_vars("delta_plus", (L,), binary=True, group="delta")
        dm = milp.add_vars("delta_minus", (L,), binary=True, group="delta")
        for l in range(L):
            milp.add_row([(a[l, j], 1.0) for j in range(m)] + [(dp[l], -1.0), (dm[l], 1.0)],
                         "==", 0.0, "norm")
            milp.add_row([(dp[l], 1.0), (dm[l], 1.0)], "==", 1.0, "norm")
    else:
        sp = milp.add_vars("sigma_plus", (L, m), binary=True, group="sigma")
        sm = milp.add_vars("sigma_minus", (L, m), binary=True, group="sigma")
        for l in range(L):
            for j in range(m):
                milp.add_row([(a[l, j], 1.0), (sp[l, j], -2 * cap_a)], ">=", -cap_a, "norm")
                milp.add_row([(a[l, j], 1.0), (sm[l, j], 2 * cap_a)], "<=", cap_a, "norm")
            milp.add_row([(sp[l, j], 1.0) for j in range(m)] + [(sm[l, j], 1.0) for j in range(m)],
                         "==", 1.0, "norm")

    if config.symmetry_breaking:
        for l in range(L - 1):
            milp.add_row([(b[l], 1.0), (b[l + 1], -1.0)], "<=", 0.0, "order")

    milp.set_objective([(z[k], 1.0) for k in range(Km)], maximize=True)
    return RdioModel(milp, config, dataset, known, x0, objective, eps, M, cap_b, V)


# ----------------------------------------------------------------------
# assignments and warm start


def rdio_assignment(rm: RdioModel, A, b, q=()) -> Optional[np.ndarray]:
    """Complete MILP point for given inferred parameters, or None if none exists.

    Binaries and distances follow from ``(A, b, q)``: a row is switched
    off for a rejected point exactly when it violates it by at least epsilon,
    and a point's distance is its largest such violation.
    """
    milp, idx = rm.milp, rm.milp.index
    L, NT = rm.n_lin, list(rm.config.templates)
    eps, M = rm.epsilon, rm.big_m
    A = np.asarray(A, float).reshape(L, rm.dataset.m)
    b = np.asarray(b, float).reshape(L)
    x = np.zeros(milp.num_vars)
    if L:
        x[idx["a"]] = A
        x[idx["b"]] = b
    for n, qq in enumerate(q):
        x[idx["q"][n]] = qq
    rej = rm.dataset.rejected
    tol = 1e-9 * (1.0 + eps)
    for k, xk in enumerate(rej):
        viol = [b[l] - float(A[l] @ xk) for l in range(L)]
        viol += [-float(np.asarray(q[n]) @ t.features(xk)) for n, t in enumerate(NT)]
        viol += list(rm.known_violation[:, k])
        viol = np.array(viol)
        nin = L + len(NT)
        ys = np.ones(viol.size)
        for i, v in enumerate(viol):
            if v >= eps - tol:
                ys[i] = 0.0
            elif i < nin and v > tol:
                return None  # violation strictly inside (0, eps)
        if ys.min() > 0:
            return None
        off = np.flatnonzero(ys == 0)
        best = off[np.argmax(viol[off])]
        ps = np.ones(viol.size)
        ps[best] = 0.0
        x[idx["y"][:, k]] = ys
        x[idx["p"][:, k]] = ps
        dk = np.where(ys[:nin] == 0, np.maximum(viol[:nin], eps), 0.0)
        x[idx["d"][:, k]] = np.minimum(dk, M)
        x[idx["z"][k]] = min(max(viol[best], 0.0), M)
    if rm.config.normalization == "l1proxy":
        for l in range(L):
            s = A[l].sum()
            if abs(abs(s) - 1.0) > 1e-9:
                return None
            x[idx["delta_plus"][l]] = 1.0 if s > 0 else 0.0
            x[idx["delta_minus"][l]] = 0.0 if s > 0 else 1.0
    else:
        cap = rm.config.cap_a
        for l in range(L):
            j = int(np.argmax(np.abs(A[l])))
            if abs(abs(A[l, j]) - cap) > 1e-9 * cap:
                return None
            x[idx["sigma_plus" if A[l, j] > 0 else "sigma_minus"][l, j]] = 1.0
    return x


def _separator(acc, xk, cap_a, cap_b, l1_sign=None):
    """Max-margin half-space keeping ``acc`` and excluding ``xk``; returns (a, b, margin)."""
    m = acc.shape[1]
    # variables: a (m), b, t
    rows = [np.r_[xk, -1.0, 1.0]]
    senses = ["<="]
    rhs = [0.0]
    for xp in acc:
        rows.append(np.r_[xp, -1.0, 0.0])
        senses.append(">=")
        rhs.append(0.0)
    if l1_sign is not None:
        rows.append(np.r_[np.ones(m), 0.0, 0.0])
        senses.append("==")
        rhs.append(float(l1_sign))
    c = np.r_[np.zeros(m + 1), 1.0]
    lo = np.r_[np.full(m, -cap_a), -cap_b, -np.inf]
    hi = np.r_[np.full(m, cap_a), cap_b, np.inf]
    # margin is bounded by the box, so the LP is never unbounded
    sol = solve_lp(LpModel(c, np.array(rows), senses, np.array(rhs), lo, hi, maximize=True))
    if sol.status != "optimal":
        return None
    return sol.x[:m], sol.x[m], sol.x[m + 1]


def _normalize_row(a, b, normalization, cap_a):
    if normalization == "l1proxy":
        s = a.sum()
        if abs(s) < 1e-12:
            return None
        a2, b2 = a / abs(s), b / abs(s)
        if np.abs(a2).max() > cap_a * (1 + 1e-12):
            return None
        return a2, b2
    top = np.abs(a).max()
    if top < 1e-12:
        return None
    f = cap_a / top
    a2 = a * f
    j = int(np.argmax(np.abs(a2)))
    a2[j] = np.sign(a2[j]) * cap_a
    return a2, b * f


def _dodge(a, b, rej, eps):
    """Loosen the offset until no rejected violation falls strictly inside (0, eps)."""
    tol = 1e-9 * (1.0 + eps)
    for _ in range(len(rej) + 1):
        v = b - rej @ a if len(rej) else np.zeros(0)
        bad = v[(v > tol) & (v < eps - tol)]
        if bad.size == 0:
            return b
        b = b - float(bad.max())
    return b


@dataclass
class WarmStart:
    A: np.ndarray
    b: np.ndarray
    q: list
    covered_by_known: np.ndarray  # rejected points already cut by a known row
    targets: list  # rejected-point index each separator was built for (None = tangent copy)


def warm_start_separation(dataset: Dataset, x0, objective: Objective, config: RdioConfig,
                          known: Optional[Region] = None, epsilon=None, greedy: bool = False
                          ) -> WarmStart:
    """Separating-hyperplane construction of a feasible inverse solution.

    Each rejected point not already cut (by epsilon) by a known row gets its
    own max-margin separator; remaining slots hold normalised copies of the
    tangent row.  With ``greedy`` set, separators that happen to cut several
    points are preferred, which lets fewer slots suffice.
    """
    x0 = np.asarray(x0, float)
    if known is None:
        known = Region()
    if known.tangent is None:
        known = append_tangent_halfspace(known, objective, x0)
    acc, rej = dataset.accepted, dataset.rejected
    eps = epsilon if epsilon is not None else (
        default_epsilon(dataset.points) if config.epsilon == "auto" else float(config.epsilon))
    _, cap_b = auto_big_m(dataset.points, eps, config.cap_a, ())
    cap_a = config.cap_a
    L = config.num_linear
    body = known
    cut = np.array([body.slacks(x).min() <= -eps if body.slacks(x).size else False
                    for x in rej], dtype=bool)
    need = [k for k in range(len(rej)) if not cut[k]]

    seps = {}
    for k in need:
        cands = []
        signs = (1.0, -1.0) if config.normalization == "l1proxy" else (None,)
        for s in signs:
            r = _separator(acc, rej[k], cap_a, cap_b, s)
            if r is not None:
                cands.append(r)
        best = max(cands, key=lambda r: r[2]) if cands else None
        if best is None or best[2] <= 1e-9 * (1.0 + np.abs(rej[k]).max()):
            if hull_membership(rej[k], acc):
                raise WellPosednessError(
                    f"rejected point {k} lies in the convex hull of accepted points", "c", k)
            raise UnsupportedError(
                f"rejected point {k} has no separator admissible under the "
                f"{config.normalization} normalization with |a| <= {cap_a}")
        a, bb, t = best
        nr = _normalize_row(a, bb, config.normalization, cap_a)
        if nr is None:
            continue
        a, bb = nr
        seps[k] = (a, _dodge(a, bb, rej, eps))

    def covers(a, bb):
        v = bb - rej @ a
        return {k for k in need if v[k] >= eps - 1e-9 * (1 + eps)}

    rows, targets = [], []
    remaining = set(need)
    if not greedy:
        if L < len(need) + 1:
            raise InputError(
                f"{L} inferred rows available, {len(need) + 1} needed for the separating construction")
        for k in need:
            if k not in seps or k not in covers(*seps[k]):
                raise InputError(f"rejected point {k} cannot be separated by epsilon within the box")
            rows.append(seps[k])
            targets.append(k)
        remaining.clear()
    else:
        while remaining and len(rows) < L:
            best, best_cov = None, set()
            for k in sorted(remaining):
                if k not in seps:
                    continue
                cov = covers(*seps[k]) & remaining
                if len(cov) > len(best_cov):
                    best, best_cov = k, cov
            if best is None:
                break
            rows.append(seps[best])
            targets.append(best)
            remaining -= best_cov
        if remaining:
            raise InputError(f"greedy warm start left {len(remaining)} rejected points uncut")

    g = objective.grad(x0)
    filler = _normalize_row(g, float(g @ x0), config.normalization, cap_a)
    if filler is not None:
        filler = (filler[0], _dodge(filler[0], filler[1], rej, eps))
    elif rows:
        filler = rows[0]
    else:
        # x_1 >= min over accepted: admissible under either normalization
        e = np.zeros(dataset.m)
        e[0] = 1.0 if config.normalization == "l1proxy" else cap_a
        filler = (e, _dodge(e, float((acc @ e).min()), rej, eps))
    while len(rows) < L:
        if filler is None:
            raise InputError("no admissible filler row for the warm start")
        rows.append(filler)
        targets.append(None)

    q = []
    for t in config.templates:
        if np.all(t.lower <= 0) and np.all(t.upper >= 0):
            q.append(np.zeros(t.param_dim))
        else:
            raise UnsupportedError(f"template {t.name!r}: warm start needs q = 0 admissible")
    A = np.array([r[0] for r in rows]).reshape(L, dataset.m)
    bvec = np.array([r[1] for r in rows]).reshape(L)
    order = np.argsort(bvec, kind="stable")
    return WarmStart(A[order], bvec[order], q, cut, [targets[i] for i in order])


# ----------------------------------------------------------------------
# solving and results


STATUSES = ("optimal", "feasible_incumbent", "infeasible", "limit_reached")


@dataclass
class InferenceResult:
    status: str
    objective_value: Optional[float]
    A: np.ndarray
    b: np.ndarray
    q: list
    y: Optional[np.ndarray] = None
    p: Optional[np.ndarray] = None
    d: Optional[np.ndarray] = None
    z: Optional[np.ndarray] = None
    epsilon: float = 0.0
    big_m: float = 0.0
    x0: Optional[np.ndarray] = None
    objective: Optional[Objective] = None
    known: Optional[Region] = None
    templates: tuple = ()
    config: Optional[dict] = None
    stats: dict = field(default_factory=dict)

    @property
    def has_solution(self) -> bool:
        return self.status in ("optimal", "feasible_incumbent")

    def region(self, with_tangent: bool = True) -> Region:
        """Known constraints plus the inferred ones."""
        known = self.known or Region()
        inf_lin = [LinearConstraint(a, bb) for a, bb in zip(self.A, self.b) if np.any(a)]
        inf_nl = list(zip(self.templates, self.q))
        reg = Region(known.known_linear, known.known_nonlinear, inf_lin, inf_nl, known.tangent)
        return reg if with_tangent else reg.without_tangent()

    def to_dict(self) -> dict:
        def arr(v):
            return None if v is None else np.asarray(v).tolist()
        return {
            "status": self.status,
            "objective_value": self.objective_value,
            "A": arr(self.A),
            "b": arr(self.b),
            "q": [arr(v) for v in self.q],
            "y": arr(self.y),
            "p": arr(self.p),
            "d": arr(self.d),
            "z": arr(self.z),
            "epsilon": self.epsilon,
            "big_m": self.big_m,
            "x0": arr(self.x0),
            "objective": None if self.objective is None else self.objective.to_dict(),
            "known": None if self.known is None else self.known.to_dict(),
            "templates": [t.spec for t in self.templates],
            "config": self.config,
            "stats": self.stats,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d) -> "InferenceResult":
        if d.get("status") not in STATUSES:
            raise InputError(f"unknown result status {d.get('status')!r}")

        def arr(v, shape=None):
            if v is None:
                return None
            out = np.asarray(v, float)
            return out.reshape(shape) if shape is not None else out
        A = np.asarray(d["A"], float)
        m = len(d["x0"]) if d.get("x0") is not None else (A.shape[1] if A.ndim == 2 else 0)
        return cls(
            status=d["status"],
            objective_value=d.get("objective_value"),
            A=A.reshape(-1, m) if m else A,
            b=np.asarray(d["b"], float),
            q=[np.asarray(v, float) for v in d.get("q", [])],
            y=arr(d.get("y")), p=arr(d.get("p")), d=arr(d.get("d")), z=arr(d.get("z")),
            epsilon=float(d.get("epsilon", 0.0)),
            big_m=float(d.get("big_m", 0.0)),
            x0=arr(d.get("x0")),
            objective=None if d.get("objective") is None else Objective.from_dict(d["objective"]),
            known=None if d.get("known") is None else Region.from_dict(d["known"]),
            templates=tuple(template_from_spec(s) for s in d.get("templates", [])),
            config=d.get("config"),
            stats=d.get("stats", {}),
        )

    @classmethod
    def from_json(cls, text: str) -> "InferenceResult":
        return cls.from_dict(json.loads(text))


DEFAULT_RDIO_OPTIONS = SolverOptions(backend="highs")


def _warm_vector(rm: RdioModel):
    L = rm.n_lin
    greedy = L < min_constraint_upper_bound(rm.dataset)
    try:
        ws = warm_start_separation(rm.dataset, rm.x0, rm.objective, rm.config, rm.known,
                                   epsilon=rm.epsilon, greedy=greedy)
    except (InputError, UnsupportedError):
        if greedy:
            return None
        try:
            ws = warm_start_separation(rm.dataset, rm.x0, rm.objective, rm.config, rm.known,
                                       epsilon=rm.epsilon, greedy=True)
        except (InputError, UnsupportedError):
            return None
    x = rdio_assignment(rm, ws.A, ws.b, ws.q)
    if x is None or rm.milp.residual(x, 1e-9) > 1e-7:
        return None
    return x


def solve_rdio(rm: RdioModel, options: Optional[SolverOptions] = None) -> InferenceResult:
    """Solve a compiled inverse model; feasible answers are re-checked for nominality."""
    options = options or DEFAULT_RDIO_OPTIONS
    start = time.perf_counter()
    warm = _warm_vector(rm) if rm.config.warm_start else None
    sol: MilpSolution = solve_milp(rm.milp, options, incumbent=warm)
    wall = time.perf_counter() - start
    stats = {"nodes": sol.nodes, "lp_count": sol.lp_count, "wall_time": wall,
             "backend": sol.backend, "milp_status": sol.status,
             "milp_objective": sol.objective, "milp_bound": sol.bound,
             "warm_start": warm is not None,
             "warm_start_objective": None if warm is None else rm.milp.evaluate(warm),
             "num_vars": rm.milp.num_vars, "num_rows": rm.milp.num_rows,
             "num_binaries": int(rm.milp.binaries.size)}
    stats.update({k: v for k, v in sol.stats.items() if isinstance(v, (str, int, float))})
    base = dict(epsilon=rm.epsilon, big_m=rm.big_m, x0=rm.x0, objective=rm.objective,
                known=rm.known, templates=tuple(rm.config.templates),
                config=rm.config.to_dict() if all(t.spec for t in rm.config.templates) else None)
    L, m = rm.n_lin, rm.dataset.m
    if not sol.has_solution:
        status = "infeasible" if sol.status == "infeasible" else "limit_reached"
        return InferenceResult(status, None, np.zeros((L, m)), np.zeros(L),
                               [np.zeros(t.param_dim) for t in rm.config.templates],
                               stats=stats, **base)
    status = "optimal" if sol.status == "optimal" else "feasible_incumbent"
    res = extract_result(rm, sol.x, status, stats, base)
    return res


def extract_result(rm: RdioModel, x, status, stats, base) -> InferenceResult:
    idx = rm.milp.index
    L, m = rm.n_lin, rm.dataset.m
    A = x[idx["a"]].reshape(L, m) if L else np.zeros((0, m))
    b = x[idx["b"]].reshape(L) if L else np.zeros(0)
    q = [x[i].copy() for i in idx["q"]]
    for n, t in enumerate(rm.config.templates):
        q[n] = np.clip(q[n], t.lower, t.upper)
    # rebuild the assignment from (A, b, q) so binaries and distances are consistent
    clean = rdio_assignment(rm, A, b, q)
    src = clean if clean is not None else x
    stats = dict(stats)
    stats["assignment_rebuilt"] = clean is not None
    obj = rm.milp.evaluate(src)
    nI = L + rm.n_nl + rm.n_known_lin + rm.n_known_nl

    def part(name, shape):
        return src[idx[name]] if name in idx else np.zeros(shape)
    res = InferenceResult(status, obj, A, b, q, y=part("y", (nI, 0)), p=part("p", (nI, 0)),
                          d=part("d", (L + rm.n_nl, 0)), z=part("z", (0,)), stats=stats, **base)
    ok = is_nominal(res.region(), rm.dataset, margin=rm.epsilon, include_tangent=True)
    res.stats["nominal"] = bool(ok)
    if not ok:
        raise NumericalError("solver returned a point whose region is not nominal")
    return res


def infer_constraints(dataset: Dataset, known: Region, objective: Objective,
                      config: RdioConfig, options: Optional[SolverOptions] = None
                      ) -> InferenceResult:
    """Well-posedness check, preferred solution, tangent half-space, build, solve."""
    rep = check_well_posed(dataset, known, config.templates)
    if not rep.overall:
        cond, idx, msg = rep.failures()[0]
        raise WellPosednessError(f"well-posedness condition ({cond}) fails: {msg}", cond, idx)
    x0, _ = preferred_solution(dataset.accepted, objective)
    known_c = append_tangent_halfspace(known.without_tangent(), objective, x0)
    rm = build_rdio(dataset, known_c, x0, objective, config)
    return solve_rdio(rm, options)


# ----------------------------------------------------------------------
# certificates


@dataclass
class KktCertificate:
    lam: np.ndarray  # nonlinear rows, known then inferred
    mu: np.ndarray  # linear rows, known then inferred
    lam0: float
    stationarity: float
    complementarity: float
    primal_violation: float

    def to_dict(self) -> dict:
        return {"lambda": self.lam.tolist(), "mu": self.mu.tolist(), "lambda0": self.lam0,
                "stationarity": self.stationarity, "complementarity": self.complementarity,
                "primal_violation": self.primal_violation}


def dio_certificate(result: InferenceResult, known: Optional[Region] = None, x0=None,
                    objective: Optional[Objective] = None, tol: float = CERT_TOL
                    ) -> KktCertificate:
    """Multipliers ``lambda = 0, mu = 0, lambda0 = -1`` and their residual checks."""
    if result.status != "optimal":
        raise CertificateError("certificate requires an optimal result", "status")
    known = known if known is not None else result.known
    x0 = np.asarray(result.x0 if x0 is None else x0, float)
    objective = objective or result.objective
    if known is None or objective is None:
        raise InputError("known region and objective are required")
    if known.tangent is None:
        raise CertificateError("tangent half-space missing from the known region", "tangent")
    region = Region(known.known_linear, known.known_nonlinear,
                    [LinearConstraint(a, bb) for a, bb in zip(result.A, result.b) if np.any(a)],
                    list(zip(result.templates, result.q)), known.tangent)
    grad = objective.grad(x0)
    nl = region.nonlinear_rows
    lin = list(region.known_linear) + list(region.inferred_linear)
    lam = np.zeros(len(nl))
    mu = np.zeros(len(lin))
    lam0 = -1.0
    r = grad + lam0 * known.tangent.normal
    for lv, (t, q) in zip(lam, nl):
        r = r + lv * t.gradient(q, x0)
    for mv, c in zip(mu, lin):
        r = r + mv * c.a
    stat = float(np.linalg.norm(r, np.inf))
    comp = [abs(lv * float(q @ t.features(x0))) for lv, (t, q) in zip(lam, nl)]
    comp += [abs(mv * (c.b - float(c.a @ x0))) for mv, c in zip(mu, lin)]
    comp.append(abs(lam0 * known.tangent.slack(x0)))
    compl = float(max(comp))
    viol = region.max_violation(x0)
    scale = 1.0 + float(np.abs(x0).max())
    cert = KktCertificate(lam, mu, lam0, stat, compl, viol)
    if stat > tol * (1.0 + float(np.abs(grad).max())):
        raise CertificateError(f"stationarity residual {stat:.3e} exceeds tolerance", "stationarity")
    if compl > tol * scale * (1.0 + float(np.abs(grad).max())):
        raise CertificateError(f"complementarity residual {compl:.3e} exceeds tolerance",
                               "complementarity")
    if viol > 1e-6 * scale:
        raise CertificateError(f"x0 violates the inferred region by {viol:.3e}", "primal")
    return cert


def verify_optimality(region: Region, objective: Objective, x0, tol: float = 1e-6) -> bool:
    """``min f over region >= f(x0) - tol``; unbounded directions count as failure."""
    return optimal_at(region, objective, x0, tol)


# ----------------------------------------------------------------------
# size audit


def expected_sizes(m, n_lin, phis, n_known_lin, n_known_nl, k_plus, k_minus) -> dict:
    """Base-model block sizes; ``n_known_lin`` excludes the tangent row."""
    n_nl = len(phis)
    return {
        "continuous": (m + 1) * n_lin + int(sum(phis)),
        "binary": (n_known_nl + n_known_lin + n_nl + n_lin) * k_minus,
        "linear_rows": n_lin * (k_plus + k_minus) + (n_known_lin + 1) * k_minus,
        "nonlinear_rows": n_nl * (k_plus + k_minus) + n_known_nl * k_minus,
    }


def printed_linear_rows(n_lin, n_known_lin, k_plus, k_minus) -> int:
    """The tabulated linear-row count, which omits inferred rows beyond one rejected point."""
    return n_lin * (k_plus + 1) + (n_known_lin + 1) * k_minus


def actual_sizes(rm: RdioModel) -> dict:
    milp = rm.milp
    vc = milp.var_counts()
    gc = milp.group_counts()
    cont = sum(vc.get((g, False), 0) for g in ["a", "b"]) + \
        sum(vc.get((f"q{n}", False), 0) for n in range(rm.n_nl))
    y = rm.milp.index["y"]
    tangent_col = rm.n_lin + rm.n_nl + rm.n_known_lin - 1
    y_no_tangent = int(y.size - (y[tangent_col].size if y.size else 0))
    return {
        "continuous": int(cont),
        "binary": y_no_tangent,
        "linear_rows": gc.get("accept_linear", 0) + gc.get("reject_inferred_linear", 0)
        + gc.get("reject_known_linear", 0),
        "nonlinear_rows": gc.get("accept_nonlinear", 0) + gc.get("reject_inferred_nonlinear", 0)
        + gc.get("reject_known_nonlinear", 0),
        "tangent_binary": int(y[tangent_col].size) if y.size else 0,
        "extra_rows": {g: c for g, c in gc.items() if not g.startswith(("accept", "reject"))},
        "extra_vars": {f"{g}{'_bin' if b else ''}": c for (g, b), c in vc.items()
                       if g in ("d", "z", "p", "delta", "sigma")},
    }


def audit_model_size(rm: RdioModel, dataset: Optional[Dataset] = None,
                     known: Optional[Region] = None, config: Optional[RdioConfig] = None) -> bool:
    """Compare base-model counts with the closed-form sizes; raise AuditError on mismatch."""
    dataset = dataset or rm.dataset
    known = known or rm.known
    config = config or rm.config
    kp = int(dataset.labels.sum())
    km = int((~dataset.labels).sum())
    n_known_lin = len(known.known_linear)
    exp = expected_sizes(dataset.m, config.num_linear,
                         [t.param_dim for t in config.templates], n_known_lin,
                         len(known.known_nonlinear), kp, km)
    act = actual_sizes(rm)
    details = {k: (exp[k], act[k]) for k in exp if exp[k] != act[k]}
    if known.tangent is not None and act["tangent_binary"] != km:
        details["tangent_binary"] = (km, act["tangent_binary"])
    if details:
        raise AuditError(f"model size mismatch: {details}", details)
    return True
