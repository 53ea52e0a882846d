"""Synthetic data: perturbed cohorts, dose guidelines, the RT forward model, planted instances."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional, Sequence

import numpy as np

from .errors import InputError
from .geometry import check_well_posed, hull_membership
from .milp.simplex import LpModel, solve_lp
from .model import Dataset, LinearConstraint, Objective, Region

PRESCRIBED_DOSE = 42.4  # Gy


# ----------------------------------------------------------------------
# cohort synthesis


@dataclass
class Cohort:
    dataset: Dataset
    base_index: np.ndarray  # which base plan each row derives from (-1 never occurs)
    clipped: np.ndarray  # bool mask of coordinates clipped at zero


def synthesize_cohort(base: Dataset, per_base: int, perturb: float = 0.2,
                      seed: int = 0) -> Cohort:
    """Each base plan followed by ``per_base`` copies scaled coordinate-wise by ``1 + u``.

    ``u`` is uniform on ``[-perturb, perturb]``, independently per
    coordinate; copies inherit the base label.  Negative doses are clipped
    at zero and flagged in ``clipped``.
    """
    if not 0.0 <= perturb < 1.0:
        raise InputError("perturb must lie in [0, 1)")
    if per_base < 0:
        raise InputError("per_base must be nonnegative")
    rng = np.random.default_rng(seed)
    rows, labels, origin = [], [], []
    for i, (x, lab) in enumerate(zip(base.points, base.labels)):
        rows.append(x.copy())
        labels.append(lab)
        origin.append(i)
        u = rng.uniform(-perturb, perturb, size=(per_base, x.size))
        for r in x * (1.0 + u):
            rows.append(r)
            labels.append(lab)
            origin.append(i)
    pts = np.array(rows).reshape(len(rows), base.m)
    clipped = pts < 0
    pts = np.where(clipped, 0.0, pts)
    return Cohort(Dataset(pts, np.array(labels, bool), base.feature_names),
                  np.array(origin), clipped)


# ----------------------------------------------------------------------
# guidelines


@dataclass(frozen=True)
class GuidelineCriterion:
    name: str
    sense: str  # min | max
    limit: float
    feature_index: Optional[int] = None

    def __post_init__(self):
        if self.sense not in ("min", "max"):
            raise InputError(f"criterion sense must be min or max, got {self.sense!r}")
        if not self.limit > 0:
            raise InputError("criterion limit must be positive")

    def met(self, value: float) -> bool:
        return value >= self.limit if self.sense == "min" else value <= self.limit


GUIDELINES = (
    GuidelineCriterion("Cavity1 min", "min", 40.28),
    GuidelineCriterion("Cavity2 min", "min", 40.28),
    GuidelineCriterion("CTV 99% min", "min", 39.01),
    GuidelineCriterion("Heart 10cc max", "max", 38.16),
    GuidelineCriterion("Lung 45cc max", "max", 38.16),
    GuidelineCriterion("CTV 0.5% max", "max", 45.79),
    GuidelineCriterion("Heart 25cc max", "max", 21.20),
    GuidelineCriterion("Lung 25cc max", "max", 36.04),
)


def guideline_table() -> list:
    return list(GUIDELINES)


def check_guidelines(plan, mapping: dict, criteria: Sequence[GuidelineCriterion] = GUIDELINES):
    """Per-criterion pass flags and their conjunction.

    ``mapping`` sends each criterion name to a feature index of ``plan``.
    """
    plan = np.asarray(plan, float)
    missing = [c.name for c in criteria if c.name not in mapping]
    if missing:
        raise InputError(f"guideline mapping lacks {missing}")
    flags = {}
    for c in criteria:
        j = int(mapping[c.name])
        if not 0 <= j < plan.size:
            raise InputError(f"feature index {j} for {c.name!r} out of range")
        flags[c.name] = bool(c.met(plan[j]))
    return flags, all(flags.values())


# ----------------------------------------------------------------------
# packaged demo data


def _data_file(name):
    return resources.files("rdio").joinpath("data", name)


def load_base_plans() -> Dataset:
    """Five illustrative base plans (non-clinical values, pipeline demos only)."""
    from .io import read_dataset_text
    return read_dataset_text(_data_file("base_plans.csv").read_text())


def load_guideline_mapping() -> dict:
    return json.loads(_data_file("guideline_mapping.json").read_text())["criteria"]


# ----------------------------------------------------------------------
# radiotherapy forward model


def rt_forward_config(m: int = 14, num_linear: int = 10):
    """Known rows ``x_1 >= 10`` and ``x_j >= 0``; objective sums features 10 and 11.

    Returns ``(known_region, objective, rdio_config)``.
    """
    from .inference import RdioConfig

    if m < 11:
        raise InputError("the RT model needs at least 11 features")
    G = np.eye(m)
    h = np.zeros(m)
    h[0] = 10.0
    known = Region([LinearConstraint(G[i], h[i]) for i in range(m)])
    c = np.zeros(m)
    c[9] = c[10] = 1.0
    cfg = RdioConfig(num_linear=num_linear, normalization="l1proxy")
    return known, Objective.linear(c), cfg


# ----------------------------------------------------------------------
# planted instances


@dataclass
class PlantedInstance:
    true_region: Region
    dataset: Dataset
    objective: Objective
    known: Region
    seed: int
    box: tuple = field(default=None)

    def sample(self, n: int, seed: int) -> Dataset:
        """Fresh labelled points from the generating distribution."""
        rng = np.random.default_rng(seed)
        lo, hi = self.box
        pts = rng.uniform(lo, hi, size=(n, lo.size))
        labels = np.array([self.true_region.contains(p, 0.0) for p in pts])
        return Dataset(pts, labels)


def _polytope_box(A, b):
    """Coordinate extents of ``{x : A x >= b}`` or None when unbounded/empty."""
    m = A.shape[1]
    lo, hi = np.empty(m), np.empty(m)
    for j in range(m):
        for sgn, out in ((1.0, lo), (-1.0, hi)):
            c = np.zeros(m)
            c[j] = sgn
            sol = solve_lp(LpModel(c, A, [">="] * len(b), b, np.full(m, -np.inf),
                                   np.full(m, np.inf)))
            if sol.status != "optimal":
                return None
            out[j] = sgn * sol.objective
    return lo, hi


def _draw(rng, lo, hi, keep, n, batch=4096, max_batches=200):
    """``n`` uniform points of the box ``[lo, hi]`` passing ``keep``, or None."""
    out, have = [], 0
    for _ in range(max_batches):
        if have >= n:
            break
        X = rng.uniform(lo, hi, size=(batch, lo.size))
        X = X[keep(X)]
        out.append(X)
        have += len(X)
    if have < n:
        return None
    return np.vstack(out)[:n] if out else np.zeros((0, lo.size))


def planted_instance(m: int, n_true: int, n_acc: int, n_rej: int, seed: int,
                     n_known: int = 0, pad: float = 0.35, max_tries: int = 100
                     ) -> PlantedInstance:
    """Random bounded polytope with labelled samples on both sides of it.

    Faces have random unit normals around a random interior centre.
    Accepted points are uniform in the polytope; rejected points are uniform
    over the part of the bounding box, inflated by ``pad`` on every side,
    that lies outside it.  The first ``n_known`` faces are declared known.
    The objective is a random linear function.
    """
    if m < 1 or n_true < m + 1:
        raise InputError("need at least m + 1 faces for a bounded polytope")
    if n_acc < 1 or n_rej < 0 or not 0 <= n_known <= n_true:
        raise InputError("invalid point or known-face counts")
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        centre = rng.uniform(1.0, 4.0, m)
        U = rng.normal(size=(n_true, m))
        U /= np.linalg.norm(U, axis=1, keepdims=True)
        r = rng.uniform(0.5, 1.5, n_true)
        b = U @ centre - r
        box = _polytope_box(U, b)
        if box is None:
            continue
        lo, hi = box
        width = hi - lo
        slo, shi = lo - pad * width, hi + pad * width
        rows = [LinearConstraint(U[i], b[i]) for i in range(n_true)]
        truth = Region(inferred_linear=rows)
        # accepted points are uniform in the polytope either way; drawing them from the
        # tight box rather than the padded one only saves rejections
        acc = _draw(rng, lo, hi, lambda X: np.all(X @ U.T >= b, axis=1), n_acc)
        rej = _draw(rng, slo, shi, lambda X: ~np.all(X @ U.T >= b, axis=1), n_rej)
        if acc is None or rej is None:
            continue
        # outside the polytope implies outside the accepted hull; checked anyway
        if any(hull_membership(x, acc) for x in rej):
            continue
        c = rng.normal(size=m)
        objective = Objective.linear(c / np.linalg.norm(c))
        known = Region(rows[:n_known])
        pts = np.vstack([acc, rej])
        labels = np.r_[np.ones(len(acc), bool), np.zeros(len(rej), bool)]
        perm = rng.permutation(len(pts))
        ds = Dataset(pts[perm], labels[perm])
        if not check_well_posed(ds, known).overall:
            continue
        return PlantedInstance(truth, ds, objective, known, seed, (slo, shi))
    raise InputError(f"planted instance sampling failed for seed {seed}; retry a different seed")
