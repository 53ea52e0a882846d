"""Forward-problem data model: objectives, constraints, templates, regions.

Constraint senses are fixed as ``a @ x >= b`` and ``g(x; q) >= 0``.  A
:class:`Region` keeps known and inferred constraints apart and may carry the
tangent half-space appended at the preferred solution.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import InputError, NumericalError, UnsupportedError
from .milp.simplex import LpModel, solve_lp

DEFAULT_TOL = 1e-6


def _scale(x) -> float:
    return 1.0 + float(np.max(np.abs(x), initial=0.0))


# ----------------------------------------------------------------------
# objectives and constraints


@dataclass(frozen=True)
class Objective:
    """``f(x) = c @ x + x @ Q @ x`` with ``Q`` symmetric positive semidefinite."""

    c: np.ndarray
    Q: Optional[np.ndarray] = None

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).reshape(-1)
        object.__setattr__(self, "c", c)
        if self.Q is not None:
            Q = np.asarray(self.Q, dtype=float)
            if Q.shape != (c.size, c.size):
                raise InputError("Q must be square with the dimension of c")
            if not np.allclose(Q, Q.T, atol=1e-12):
                raise InputError("Q must be symmetric")
            if np.linalg.eigvalsh(Q).min() < -1e-9:
                raise UnsupportedError("objective is not convex (Q has a negative eigenvalue)")
            if not np.any(Q):
                Q = None
            object.__setattr__(self, "Q", Q)

    @classmethod
    def linear(cls, c) -> "Objective":
        return cls(np.asarray(c, float))

    @classmethod
    def quadratic(cls, Q, c=None) -> "Objective":
        Q = np.asarray(Q, float)
        return cls(np.zeros(Q.shape[0]) if c is None else c, Q)

    @property
    def kind(self) -> str:
        return "linear" if self.Q is None else "convex_quadratic"

    @property
    def dim(self) -> int:
        return self.c.size

    def value(self, x) -> float:
        x = np.asarray(x, float)
        v = float(self.c @ x)
        if self.Q is not None:
            v += float(x @ self.Q @ x)
        return v

    def grad(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        g = self.c.copy()
        if self.Q is not None:
            g = g + 2.0 * (self.Q @ x)
        return g

    def to_dict(self) -> dict:
        return {"c": self.c.tolist(), "Q": None if self.Q is None else self.Q.tolist()}

    @classmethod
    def from_dict(cls, d) -> "Objective":
        return cls(np.asarray(d["c"], float), None if d.get("Q") is None else np.asarray(d["Q"]))


@dataclass(frozen=True)
class LinearConstraint:
    """``a @ x >= b``."""

    a: np.ndarray
    b: float

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float).reshape(-1)
        if not np.any(a):
            raise InputError("linear constraint needs a nonzero normal")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", float(self.b))

    def slack(self, x) -> float:
        return float(self.a @ np.asarray(x, float)) - self.b

    def to_dict(self) -> dict:
        return {"a": self.a.tolist(), "b": self.b}

    @classmethod
    def from_dict(cls, d) -> "LinearConstraint":
        return cls(np.asarray(d["a"], float), d["b"])


# ----------------------------------------------------------------------
# nonlinear templates


@dataclass(frozen=True)
class NonlinearTemplate:
    """``g(x; q) = sum_j q_j * phi_j(x)``, affine in ``q`` and concave in ``x``.

    Every basis function is flagged affine or concave.  Parameters that
    multiply concave bases must be nonnegative, which keeps ``g`` concave for
    every admissible ``q``.  ``spec`` is the serialisable recipe used by
    :func:`template_from_spec`; hand-built templates need not have one.
    """

    basis: tuple
    concave: tuple
    lower: np.ndarray
    upper: np.ndarray
    name: str = "template"
    basis_grad: Optional[tuple] = None
    spec: Optional[dict] = None

    def __post_init__(self):
        basis = tuple(self.basis)
        concave = tuple(bool(c) for c in self.concave)
        if len(basis) != len(concave) or not basis:
            raise InputError("template needs one concavity flag per basis function")
        lo = np.broadcast_to(np.asarray(self.lower, float), (len(basis),)).copy()
        hi = np.broadcast_to(np.asarray(self.upper, float), (len(basis),)).copy()
        if np.any(lo > hi):
            raise InputError("template parameter bounds are inverted")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise InputError("template parameter bounds must be finite")
        bad = [j for j, c in enumerate(concave) if c and lo[j] < 0]
        if bad:
            raise InputError(
                f"parameter {bad[0]} multiplies a concave basis and must be nonnegative")
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "concave", concave)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def param_dim(self) -> int:
        return len(self.basis)

    def features(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        return np.array([float(phi(x)) for phi in self.basis])

    def check_params(self, q) -> np.ndarray:
        q = np.asarray(q, float).reshape(-1)
        if q.size != self.param_dim:
            raise InputError(f"expected {self.param_dim} parameters, got {q.size}")
        tol = 1e-9 * (1.0 + np.abs(q))
        if np.any(q < self.lower - tol) or np.any(q > self.upper + tol):
            raise InputError("template parameters outside their admissible box")
        return q

    def gradient(self, q, x) -> np.ndarray:
        q = np.asarray(q, float)
        x = np.asarray(x, float)
        if self.basis_grad is not None:
            return sum(qj * np.asarray(gj(x), float) for qj, gj in zip(q, self.basis_grad))
        out = np.empty_like(x)
        for i in range(x.size):
            h = 1e-6 * (1.0 + abs(x[i]))
            e = np.zeros_like(x)
            e[i] = h
            out[i] = (q @ self.features(x + e) - q @ self.features(x - e)) / (2 * h)
        return out


def eval_nonlinear(template: NonlinearTemplate, q, x) -> float:
    q = template.check_params(q)
    return float(q @ template.features(x))


def separable_quadratic(m: int, bound: float = 10.0, name: str = "separable_quadratic"):
    """Axis-aligned concave quadratic ``s + r @ x - sum_j w_j x_j**2`` with ``w >= 0``."""
    basis = []
    grads = []
    for j in range(m):
        basis.append(lambda x, j=j: -x[j] ** 2)
        grads.append(lambda x, j=j: -2.0 * x[j] * np.eye(len(x))[j])
    for j in range(m):
        basis.append(lambda x, j=j: x[j])
        grads.append(lambda x, j=j: np.eye(len(x))[j])
    basis.append(lambda x: 1.0)
    grads.append(lambda x: np.zeros(len(x)))
    concave = [True] * m + [False] * (m + 1)
    lower = [0.0] * m + [-bound] * (m + 1)
    upper = [bound] * (2 * m + 1)
    return NonlinearTemplate(tuple(basis), tuple(concave), np.array(lower), np.array(upper),
                             name=name, basis_grad=tuple(grads),
                             spec={"kind": "separable_quadratic", "m": m, "bound": bound})


def affine_template(m: int, bound: float = 10.0, name: str = "affine"):
    """``s + r @ x`` as a template (useful as a degenerate concave family)."""
    basis = [lambda x, j=j: x[j] for j in range(m)] + [lambda x: 1.0]
    grads = [lambda x, j=j: np.eye(len(x))[j] for j in range(m)] + [lambda x: np.zeros(len(x))]
    return NonlinearTemplate(tuple(basis), (False,) * (m + 1), np.full(m + 1, -bound),
                             np.full(m + 1, bound), name=name, basis_grad=tuple(grads),
                             spec={"kind": "affine", "m": m, "bound": bound})


_TEMPLATE_KINDS = {"separable_quadratic": separable_quadratic, "affine": affine_template}


def template_from_spec(spec: dict) -> NonlinearTemplate:
    kind = spec.get("kind")
    if kind not in _TEMPLATE_KINDS:
        raise UnsupportedError(f"unknown template kind {kind!r}")
    args = {k: v for k, v in spec.items() if k != "kind"}
    return _TEMPLATE_KINDS[kind](**args)


# ----------------------------------------------------------------------
# regions


@dataclass(frozen=True)
class Halfspace:
    """``{x : normal @ x >= offset}``."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        n = np.asarray(self.normal, float).reshape(-1)
        if not np.any(n):
            raise InputError("half-space normal must be nonzero")
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", float(self.offset))

    def slack(self, x) -> float:
        return float(self.normal @ np.asarray(x, float)) - self.offset

    def contains(self, x, tol: float = 0.0) -> bool:
        return self.slack(x) >= -tol * _scale(x)

    def as_constraint(self) -> LinearConstraint:
        return LinearConstraint(self.normal, self.offset)

    def to_dict(self) -> dict:
        return {"normal": self.normal.tolist(), "offset": self.offset}

    @classmethod
    def from_dict(cls, d) -> "Halfspace":
        return cls(np.asarray(d["normal"], float), d["offset"])


@dataclass(frozen=True)
class Region:
    """Known constraints ``X``, inferred constraints, and an optional tangent ``C``.

    Nonlinear entries are ``(template, q)`` pairs.
    """

    known_linear: tuple = ()
    known_nonlinear: tuple = ()
    inferred_linear: tuple = ()
    inferred_nonlinear: tuple = ()
    tangent: Optional[Halfspace] = None

    def __post_init__(self):
        for f in ("known_linear", "known_nonlinear", "inferred_linear", "inferred_nonlinear"):
            object.__setattr__(self, f, tuple(getattr(self, f)))
        for t, q in self.known_nonlinear + self.inferred_nonlinear:
            t.check_params(q)
        dims = {c.a.size for c in self.known_linear + self.inferred_linear}
        if self.tangent is not None:
            dims.add(self.tangent.normal.size)
        if len(dims) > 1:
            raise InputError("constraints in a region must share one dimension")

    # -- structure --------------------------------------------------------
    @property
    def linear_rows(self) -> list:
        rows = list(self.known_linear) + list(self.inferred_linear)
        if self.tangent is not None:
            rows.append(self.tangent.as_constraint())
        return rows

    @property
    def nonlinear_rows(self) -> list:
        return list(self.known_nonlinear) + list(self.inferred_nonlinear)

    @property
    def is_linear(self) -> bool:
        return not self.nonlinear_rows

    def without_tangent(self) -> "Region":
        return replace(self, tangent=None)

    def with_tangent(self, h: Optional[Halfspace]) -> "Region":
        return replace(self, tangent=h)

    def known_part(self) -> "Region":
        return Region(self.known_linear, self.known_nonlinear, tangent=self.tangent)

    # -- evaluation -------------------------------------------------------
    def slacks(self, x) -> np.ndarray:
        """Constraint slacks, linear rows first (tangent last), then nonlinear."""
        x = np.asarray(x, float)
        vals = [c.slack(x) for c in self.linear_rows]
        vals += [float(q @ t.features(x)) for t, q in self.nonlinear_rows]
        return np.array(vals)

    def max_violation(self, x) -> float:
        s = self.slacks(x)
        return float(max(0.0, -s.min())) if s.size else 0.0

    def contains(self, x, tol: float = DEFAULT_TOL) -> bool:
        s = self.slacks(x)
        return bool(s.size == 0 or s.min() >= -tol * _scale(x))

    def linear_system(self):
        rows = self.linear_rows
        if not rows:
            return None, None
        return np.array([r.a for r in rows]), np.array([r.b for r in rows])

    def to_dict(self) -> dict:
        def nl(items):
            out = []
            for t, q in items:
                if t.spec is None:
                    raise UnsupportedError(f"template {t.name!r} has no serialisable spec")
                out.append({"template": t.spec, "q": np.asarray(q).tolist()})
            return out
        return {
            "known_linear": [c.to_dict() for c in self.known_linear],
            "known_nonlinear": nl(self.known_nonlinear),
            "inferred_linear": [c.to_dict() for c in self.inferred_linear],
            "inferred_nonlinear": nl(self.inferred_nonlinear),
            "tangent": None if self.tangent is None else self.tangent.to_dict(),
        }

    @classmethod
    def from_dict(cls, d) -> "Region":
        def nl(items):
            return [(template_from_spec(e["template"]), np.asarray(e["q"], float)) for e in items]
        tan = d.get("tangent")
        return cls(
            [LinearConstraint.from_dict(c) for c in d.get("known_linear", [])],
            nl(d.get("known_nonlinear", [])),
            [LinearConstraint.from_dict(c) for c in d.get("inferred_linear", [])],
            nl(d.get("inferred_nonlinear", [])),
            None if tan is None else Halfspace.from_dict(tan),
        )


def region_contains(region: Region, x, tol: float = DEFAULT_TOL) -> bool:
    return region.contains(x, tol)


# ----------------------------------------------------------------------
# datasets


ACCEPTED = "accepted"
REJECTED = "rejected"


@dataclass
class Dataset:
    """Labelled decisions; ``labels[k]`` is True for accepted observations."""

    points: np.ndarray
    labels: np.ndarray
    feature_names: Sequence[str] = field(default_factory=list)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(0 if pts.size == 0 else -1, pts.size if pts.size else 0)
        self.points = pts
        lab = np.asarray(self.labels)
        if lab.dtype.kind in "US":
            unknown = set(lab.tolist()) - {ACCEPTED, REJECTED}
            if unknown:
                raise InputError(f"unknown label {sorted(unknown)[0]!r}")
            lab = lab == ACCEPTED
        self.labels = lab.astype(bool).reshape(-1)
        if self.labels.size != self.points.shape[0]:
            raise InputError("one label per observation is required")
        if not np.all(np.isfinite(self.points)):
            raise InputError("observation coordinates must be finite")
        if not self.feature_names:
            self.feature_names = [f"x{j + 1}" for j in range(self.m)]
        if len(self.feature_names) != self.m:
            raise InputError("feature name count does not match the dimension")
        self.feature_names = list(self.feature_names)

    @classmethod
    def from_groups(cls, accepted, rejected, feature_names=None) -> "Dataset":
        acc = np.asarray(accepted, float).reshape(len(accepted), -1) if len(accepted) else None
        rej = np.asarray(rejected, float).reshape(len(rejected), -1) if len(rejected) else None
        parts = [p for p in (acc, rej) if p is not None]
        if not parts:
            raise InputError("dataset needs at least one observation")
        pts = np.vstack(parts)
        labels = np.r_[np.ones(len(accepted), bool), np.zeros(len(rejected), bool)]
        return cls(pts, labels, feature_names or [])

    @property
    def m(self) -> int:
        return self.points.shape[1] if self.points.ndim == 2 else 0

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def accepted(self) -> np.ndarray:
        return self.points[self.labels]

    @property
    def rejected(self) -> np.ndarray:
        return self.points[~self.labels]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        return Dataset(self.points[idx], self.labels[idx], self.feature_names)

    def scaled(self, s: float) -> "Dataset":
        return Dataset(self.points * s, self.labels.copy(), self.feature_names)


# ----------------------------------------------------------------------
# region-level predicates


def is_nominal(region: Region, dataset: Dataset, tol: float = DEFAULT_TOL,
               margin: float = 0.0, include_tangent: bool = False) -> bool:
    """Accepted points inside ``region`` and rejected points outside.

    The tangent half-space is ignored unless ``include_tangent`` is set (the
    reduced inverse model treats it as one more known row).  With
    ``margin > 0`` every rejected point must violate some constraint by at
    least ``margin``.
    """
    body = region if include_tangent else region.without_tangent()
    for x in dataset.accepted:
        if not body.contains(x, tol):
            return False
    for x in dataset.rejected:
        if margin > 0:
            if body.max_violation(x) < margin - tol * _scale(x):
                return False
        elif body.contains(x, tol=-tol):
            return False
    return True


@dataclass
class RegionMinimum:
    status: str  # optimal | unbounded
    value: Optional[float]
    point: Optional[np.ndarray]
    lower_bound: Optional[float] = None
    ray: Optional[np.ndarray] = None
    iterations: int = 0


BOX_FACTOR = 1e3


def _lp_over_region(region: Region, cost, box=None):
    A, b = region.linear_system()
    m = cost.size
    if A is None:
        A = np.zeros((0, m))
        b = np.zeros(0)
    lo = np.full(m, -np.inf) if box is None else box[0]
    hi = np.full(m, np.inf) if box is None else box[1]
    return solve_lp(LpModel(cost, A, [">="] * len(b), b, lo, hi))


def _slsqp_linear(region: Region, cost, start, box):
    from scipy.optimize import minimize

    cons = []
    A, b = region.linear_system()
    if A is not None:
        cons.append({"type": "ineq", "fun": lambda x: A @ x - b, "jac": lambda x: A})
    for t, q in region.nonlinear_rows:
        cons.append({"type": "ineq",
                     "fun": lambda x, t=t, q=q: np.array([q @ t.features(x)]),
                     "jac": lambda x, t=t, q=q: t.gradient(q, x).reshape(1, -1)})
    res = minimize(lambda x: float(cost @ x), np.asarray(start, float), jac=lambda x: cost,
                   bounds=list(zip(box[0], box[1])), constraints=cons, method="SLSQP",
                   options={"ftol": 1e-12, "maxiter": 500})
    return res.x


def _box_around(start, points=None):
    s = np.asarray(start, float)
    ref = s if points is None else np.vstack([s, np.asarray(points, float)])
    half = BOX_FACTOR * (1.0 + np.abs(ref).max())
    return s - half, s + half


def _linear_minimum(region: Region, objective: Objective, start) -> RegionMinimum:
    if region.is_linear:
        sol = _lp_over_region(region, objective.c)
        if sol.status == "unbounded":
            return RegionMinimum("unbounded", -np.inf, None, -np.inf, ray=sol.ray)
        if sol.status != "optimal":
            raise InputError("region is empty")
        return RegionMinimum("optimal", sol.objective, sol.x, sol.objective)
    return conditional_gradient_minimum(region, objective, start)


def conditional_gradient_minimum(region: Region, objective: Objective, start,
                                 tol: float = 1e-9, max_iter: int = 10_000,
                                 target: Optional[float] = None) -> RegionMinimum:
    """Frank-Wolfe over ``region`` intersected with a large box around ``start``.

    Linear subproblems go to the simplex solver when the region is
    polyhedral and to SLSQP otherwise.  Returns upper (``value``) and lower
    (``lower_bound``) estimates; with ``target`` set, stops as soon as the
    comparison against ``target`` is decided.
    """
    x = np.asarray(start, float).copy()
    box = _box_around(x)
    lb = -np.inf
    for it in range(max_iter):
        g = objective.grad(x)
        if region.is_linear:
            sol = _lp_over_region(region, g, box)
            if sol.status != "optimal":
                raise InputError("region is empty")
            s = sol.x
        else:
            s = _slsqp_linear(region, g, x, box)
        fx = objective.value(x)
        gap = float(g @ (x - s))
        lb = max(lb, fx - gap)
        if gap <= tol * (1.0 + abs(fx)):
            return RegionMinimum("optimal", fx, x, lb, iterations=it)
        if target is not None and (fx < target or lb >= target):
            return RegionMinimum("optimal", fx, x, lb, iterations=it)
        d = s - x
        if objective.Q is None:
            step = 1.0
        else:
            curv = float(d @ objective.Q @ d)
            step = 1.0 if curv <= 0 else min(1.0, -float(g @ d) / (2.0 * curv))
        x = x + step * d
    raise NumericalError("conditional gradient did not converge", residual=gap)


def minimize_over_region(region: Region, objective: Objective, start) -> RegionMinimum:
    return _linear_minimum(region, objective, start)


def is_imputed(region: Region, dataset: Dataset, objective: Objective, x0,
               tol: float = DEFAULT_TOL) -> bool:
    """Nominal, contains ``x0``, and ``x0`` minimises ``objective`` over ``region``."""
    if not is_nominal(region, dataset, tol):
        return False
    if not region.contains(x0, tol):
        return False
    return optimal_at(region, objective, x0, tol)


def optimal_at(region: Region, objective: Objective, x0, tol: float = DEFAULT_TOL) -> bool:
    """``min f over region >= f(x0) - tol`` (decided by LP or conditional gradient)."""
    f0 = objective.value(x0)
    thresh = f0 - tol * (1.0 + abs(f0))
    if region.is_linear and objective.Q is None:
        res = _linear_minimum(region, objective, x0)
        return res.status == "optimal" and res.value >= thresh
    res = conditional_gradient_minimum(region, objective, x0, target=thresh)
    return res.lower_bound >= thresh or (res.value >= thresh and res.lower_bound >= thresh - tol)


# ----------------------------------------------------------------------
# sampling


def hit_and_run(region: Region, start, n: int, rng, box=None, burn: int = 50) -> np.ndarray:
    """Approximately uniform samples from ``region`` (intersected with ``box``)."""
    x = np.asarray(start, float).copy()
    m = x.size
    if box is None:
        box = _box_around(x)
    lo, hi = box
    if not region.contains(x, 1e-9):
        raise InputError("hit-and-run start point must lie in the region")

    def inside(p):
        return region.contains(p, 0.0) and np.all(p >= lo) and np.all(p <= hi)

    out = []
    for it in range(burn + n):
        d = rng.normal(size=m)
        d /= np.linalg.norm(d)
        t_hi = _edge(inside, x, d)
        t_lo = -_edge(inside, x, -d)
        t = rng.uniform(t_lo, t_hi)
        cand = x + t * d
        if inside(cand):
            x = cand
        if it >= burn:
            out.append(x.copy())
    return np.array(out)


def _edge(inside, x, d, iters: int = 60) -> float:
    step = 1.0
    while inside(x + step * d) and step < 1e12:
        step *= 2.0
    a, b = 0.0, step
    for _ in range(iters):
        mid = 0.5 * (a + b)
        if inside(x + mid * d):
            a = mid
        else:
            b = mid
    return a
