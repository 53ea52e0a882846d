"""Radiotherapy demo: synthesize a plan cohort, infer constraints, check guidelines.

The cohort solve is large; with a short time limit the best incumbent is
reported together with its status.
"""

import argparse
from pathlib import Path

import numpy as np

from rdio import io as rio
from rdio.datagen import (check_guidelines, load_base_plans, load_guideline_mapping,
                          rt_forward_config, synthesize_cohort)
from rdio.inference import infer_constraints
from rdio.milp.branch import SolverOptions


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--per-base", dest="per_base", type=int, default=20)
    p.add_argument("--perturb", type=float, default=0.2)
    p.add_argument("--lconstraints", type=int, default=10)
    p.add_argument("--time-limit", dest="time_limit", type=float, default=120.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="results/rt_demo.json")
    args = p.parse_args(argv)

    cohort = synthesize_cohort(load_base_plans(), args.per_base, args.perturb, args.seed)
    ds = cohort.dataset
    print(f"cohort: {int(ds.labels.sum())} accepted, {int((~ds.labels).sum())} rejected, "
          f"{int(cohort.clipped.sum())} clipped coordinates")
    mapping = load_guideline_mapping()
    passing = [check_guidelines(x, mapping)[1] for x in ds.points]
    print(f"plans meeting every guideline: {sum(passing)}/{ds.n}")

    known, obj, cfg = rt_forward_config(ds.m, args.lconstraints)
    res = infer_constraints(ds, known, obj, cfg,
                            SolverOptions(backend="highs", time_limit=args.time_limit))
    print(f"status {res.status}, objective {res.objective_value}")
    report = {"args": vars(args), "status": res.status,
              "guideline_pass": int(sum(passing))}
    if res.has_solution:
        region = res.region(with_tangent=True)
        inside = np.array([region.contains(x) for x in ds.points])
        print(f"training accuracy {np.mean(inside == ds.labels):.3f}")
        report["result"] = res.to_dict()
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    rio.write_json(report, out)


if __name__ == "__main__":
    main()
