"""Repeated 60/40 trials on independent planted polytopes.

Writes one JSON record per instance plus a summary line per metric.
"""

import argparse
import time
from pathlib import Path

from rdio import io as rio
from rdio.datagen import planted_instance
from rdio.harness import ForwardConfig, run_trial, summarize
from rdio.inference import RdioConfig
from rdio.milp.branch import SolverOptions


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--instances", type=int, default=20)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--n-true", dest="n_true", type=int, default=4)
    p.add_argument("--n-acc", dest="n_acc", type=int, default=300)
    p.add_argument("--n-rej", dest="n_rej", type=int, default=30)
    p.add_argument("--lconstraints", type=int, default=4)
    p.add_argument("--train-frac", dest="train_frac", type=float, default=0.6)
    p.add_argument("--time-limit", dest="time_limit", type=float, default=20.0)
    p.add_argument("--seed", type=int, default=100)
    p.add_argument("--out", default="results/planted_generalization.json")
    args = p.parse_args(argv)

    cfg = RdioConfig(num_linear=args.lconstraints)
    opts = SolverOptions(backend="highs", time_limit=args.time_limit)
    trials, t0 = [], time.perf_counter()
    for s in range(args.instances):
        pi = planted_instance(args.m, args.n_true, args.n_acc, args.n_rej, args.seed + s)
        tr = run_trial(pi.dataset, args.train_frac, s, cfg, ForwardConfig(pi.known, pi.objective),
                       opts)
        trials.append(tr)
        acc = tr.metrics.get("accuracy")
        print(f"instance {s:3d}: {tr.status:20s} accuracy "
              f"{'n/a' if acc is None else f'{acc:.3f}'}", flush=True)
    agg = summarize(trials)
    for k in ("accuracy", "recall", "specificity", "precision", "f1"):
        a = agg[k]
        if a["mean"] is not None:
            print(f"{k:12s} {a['mean']:.3f} +- {a['std']:.3f} (n={a['n']})")
    print(f"wall time {time.perf_counter() - t0:.1f} s")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    rio.write_json({"args": vars(args), "aggregate": agg,
                    "trials": [t.to_dict() for t in trials]}, out)


if __name__ == "__main__":
    main()
