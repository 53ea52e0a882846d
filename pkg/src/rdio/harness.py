"""Train/test evaluation: splits, confusion matrices, repeated trials, fraction sweeps."""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InputError, NumericalError, WellPosednessError
from .geometry import check_well_posed, preferred_solution
from .inference import (InferenceResult, RdioConfig, append_tangent_halfspace, build_rdio,
                        solve_rdio)
from .milp.branch import SolverOptions
from .model import DEFAULT_TOL, Dataset, Objective, Region

METRICS = ("accuracy", "precision", "recall", "specificity", "f1")


@dataclass
class ForwardConfig:
    known: Region
    objective: Objective

    def to_dict(self) -> dict:
        return {"known": self.known.to_dict(), "objective": self.objective.to_dict()}

    @classmethod
    def from_dict(cls, d) -> "ForwardConfig":
        return cls(Region.from_dict(d["known"]), Objective.from_dict(d["objective"]))


def _round_half_up(v: float) -> int:
    return int(math.floor(v + 0.5))


def split(dataset: Dataset, frac_past: float, seed: int):
    """Stratified split into (past, future) with ``round(frac * n)`` past points."""
    if not 0.0 < frac_past < 1.0:
        raise InputError("train fraction must lie strictly between 0 and 1")
    n = dataset.n
    n_past = _round_half_up(frac_past * n)
    acc = np.flatnonzero(dataset.labels)
    rej = np.flatnonzero(~dataset.labels)
    if acc.size == 0:
        raise InputError("dataset has no accepted points to split")
    rng = np.random.default_rng(seed)
    acc = rng.permutation(acc)
    rej = rng.permutation(rej)
    na = _round_half_up(frac_past * acc.size)
    # keep at least one accepted point on each side when there are two or more
    lo_a = 1
    hi_a = acc.size - 1 if acc.size >= 2 else acc.size
    na = min(max(na, lo_a), hi_a)
    nr = n_past - na
    if nr < 0 or nr > rej.size:
        nr = min(max(nr, 0), rej.size)
        na = min(max(n_past - nr, lo_a), hi_a)
    if na + nr != n_past:
        raise InputError(f"cannot form a stratified split of size {n_past}")
    past = np.sort(np.r_[acc[:na], rej[:nr]])
    future = np.sort(np.r_[acc[na:], rej[nr:]])
    return dataset.subset(past), dataset.subset(future)


@dataclass
class ConfusionMatrix:
    """Predicted accepted = inside the region; actual = dataset label."""

    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def to_dict(self) -> dict:
        return asdict(self)


def classify(region: Region, dataset: Dataset, tol: float = DEFAULT_TOL) -> ConfusionMatrix:
    if dataset.n and region.linear_rows and region.linear_rows[0].a.size != dataset.m:
        raise InputError("region and dataset differ in dimension")
    cm = ConfusionMatrix()
    for x, lab in zip(dataset.points, dataset.labels):
        pred = region.contains(x, tol)
        if pred and lab:
            cm.tp += 1
        elif pred:
            cm.fp += 1
        elif lab:
            cm.fn += 1
        else:
            cm.tn += 1
    return cm


def _ratio(num, den):
    return None if den == 0 else num / den


def metrics(cm: ConfusionMatrix) -> dict:
    """Standard rates; a ratio with a zero denominator is reported as None."""
    if cm.total == 0:
        raise InputError("metrics need a nonempty confusion matrix")
    precision = _ratio(cm.tp, cm.tp + cm.fp)
    recall = _ratio(cm.tp, cm.tp + cm.fn)
    if precision is None or recall is None or precision + recall == 0:
        f1 = None if precision is None or recall is None else 0.0
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return {
        "accuracy": (cm.tp + cm.tn) / cm.total,
        "precision": precision,
        "recall": recall,
        "specificity": _ratio(cm.tn, cm.tn + cm.fp),
        "f1": f1,
    }


# ----------------------------------------------------------------------
# trials


@dataclass
class TrialResult:
    seed: int
    train_fraction: float
    status: str
    complete: bool
    confusion: Optional[ConfusionMatrix] = None
    metrics: dict = field(default_factory=dict)
    train_confusion: Optional[ConfusionMatrix] = None
    train_accuracy: Optional[float] = None
    feasible_accepted_fraction: Optional[float] = None  # among region-feasible future points
    accepted_feasible_fraction: Optional[float] = None  # among future accepted points
    objective_value: Optional[float] = None
    stats: dict = field(default_factory=dict)
    error: Optional[str] = None

    def to_dict(self) -> dict:
        d = asdict(self)
        return d

    @classmethod
    def from_dict(cls, d) -> "TrialResult":
        d = dict(d)
        for k in ("confusion", "train_confusion"):
            if d.get(k) is not None:
                d[k] = ConfusionMatrix(**d[k])
        return cls(**d)


def run_trial(dataset: Dataset, frac_past: float, seed: int, rdio_config: RdioConfig,
              fo_config: ForwardConfig, options: Optional[SolverOptions] = None,
              return_result: bool = False):
    """Split, infer on the past part, classify the future part.

    Returns a :class:`TrialResult` (and the :class:`InferenceResult` when
    ``return_result``).  Failures are recorded on the trial rather than raised.
    """
    start = time.perf_counter()
    past, future = split(dataset, frac_past, seed)
    res: Optional[InferenceResult] = None
    try:
        rep = check_well_posed(past, fo_config.known, rdio_config.templates)
        if not rep.overall:
            cond, idx, msg = rep.failures()[0]
            raise WellPosednessError(msg, cond, idx)
        x0, _ = preferred_solution(past.accepted, fo_config.objective)
        known = append_tangent_halfspace(fo_config.known.without_tangent(),
                                         fo_config.objective, x0)
        rm = build_rdio(past, known, x0, fo_config.objective, rdio_config)
        res = solve_rdio(rm, options)
    except (InputError, NumericalError) as exc:
        tr = TrialResult(seed, frac_past, "error", False, error=f"{type(exc).__name__}: {exc}",
                         stats={"wall_time": time.perf_counter() - start})
        return (tr, None) if return_result else tr
    if not res.has_solution:
        tr = TrialResult(seed, frac_past, res.status, False, stats=res.stats,
                         error="solver returned no solution")
        return (tr, res) if return_result else tr
    region = res.region(with_tangent=True)
    train_cm = classify(region, past)
    train_acc = metrics(train_cm)["accuracy"]
    if res.status == "optimal" and train_acc != 1.0:
        raise NumericalError(f"optimal inverse solution misclassifies training data "
                             f"(accuracy {train_acc})")
    cm = classify(region, future)
    met = metrics(cm) if cm.total else {}
    tr = TrialResult(
        seed, frac_past, res.status, res.status == "optimal", cm, met, train_cm, train_acc,
        feasible_accepted_fraction=_ratio(cm.tp, cm.tp + cm.fp),
        accepted_feasible_fraction=_ratio(cm.tp, cm.tp + cm.fn),
        objective_value=res.objective_value,
        stats={k: res.stats.get(k) for k in ("nodes", "wall_time", "backend", "warm_start",
                                             "num_binaries")},
    )
    return (tr, res) if return_result else tr


# ----------------------------------------------------------------------
# sweeps


def _summary(values):
    vals = [v for v in values if v is not None]
    if not vals:
        return {"mean": None, "std": None, "n": 0}
    arr = np.array(vals, float)
    return {"mean": float(arr.mean()), "std": float(arr.std(ddof=1)) if arr.size > 1 else 0.0,
            "n": int(arr.size)}


def summarize(trials: Sequence[TrialResult]) -> dict:
    """Mean and sample std per metric over trials that produced a region."""
    usable = [t for t in trials if t.confusion is not None]
    out = {m: _summary([t.metrics.get(m) for t in usable]) for m in METRICS}
    out["train_accuracy"] = _summary([t.train_accuracy for t in usable])
    out["feasible_accepted_fraction"] = _summary([t.feasible_accepted_fraction for t in usable])
    out["accepted_feasible_fraction"] = _summary([t.accepted_feasible_fraction for t in usable])
    out["trials"] = len(trials)
    out["optimal"] = sum(t.status == "optimal" for t in trials)
    out["failed"] = sum(t.confusion is None for t in trials)
    return out


@dataclass
class SweepResult:
    fractions: list
    trials: dict  # fraction -> list of TrialResult
    seed: int
    config: dict = field(default_factory=dict)

    def aggregates(self) -> dict:
        return {f: summarize(self.trials[f]) for f in self.fractions}

    def to_dict(self) -> dict:
        agg = self.aggregates()
        return {
            "seed": self.seed,
            "config": self.config,
            "fractions": self.fractions,
            "cells": [{"fraction": f, "aggregate": agg[f],
                       "trials": [t.to_dict() for t in self.trials[f]]} for f in self.fractions],
        }

    @classmethod
    def from_dict(cls, d) -> "SweepResult":
        trials = {c["fraction"]: [TrialResult.from_dict(t) for t in c["trials"]]
                  for c in d["cells"]}
        return cls(list(d["fractions"]), trials, d["seed"], d.get("config", {}))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = list(METRICS) + ["feasible_accepted_fraction", "accepted_feasible_fraction"]
        w.writerow(["fraction", "trials", "optimal"] +
                   [f"{c}_{s}" for c in cols for s in ("mean", "std")])
        agg = self.aggregates()
        for f in self.fractions:
            a = agg[f]
            row = [repr(float(f)), a["trials"], a["optimal"]]
            for c in cols:
                for s in ("mean", "std"):
                    v = a[c][s]
                    row.append("" if v is None else repr(v))
            w.writerow(row)
        return buf.getvalue()


def trial_seed(master: int, fraction_index: int, trial: int) -> int:
    return int(np.random.SeedSequence([master, fraction_index, trial]).generate_state(1)[0])


def _trial_job(args):
    return run_trial(*args)


def sweep(dataset: Dataset, fractions: Sequence[float], trials_per_fraction: int,
          rdio_config: RdioConfig, fo_config: ForwardConfig, seed: int = 0,
          options: Optional[SolverOptions] = None, workers: int = 1) -> SweepResult:
    """Repeated trials per train fraction; results are ordered by (fraction, trial)."""
    fractions = [float(f) for f in fractions]
    if any(not 0 < f < 1 for f in fractions):
        raise InputError("fractions must lie in (0, 1)")
    if trials_per_fraction < 1:
        raise InputError("at least one trial per fraction is required")
    jobs = [(dataset, f, trial_seed(seed, i, t), rdio_config, fo_config, options)
            for i, f in enumerate(fractions) for t in range(trials_per_fraction)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_trial_job, jobs))
    else:
        results = [_trial_job(j) for j in jobs]
    cells = {f: [] for f in fractions}
    for (_, f, *_rest), r in zip(jobs, results):
        cells[f].append(r)
    cfg = {"trials_per_fraction": trials_per_fraction}
    try:
        cfg["rdio"] = rdio_config.to_dict()
    except InputError:
        pass
    return SweepResult(fractions, cells, seed, cfg)


def default_fractions() -> list:
    return [round(0.2 + 0.1 * i, 1) for i in range(7)]
