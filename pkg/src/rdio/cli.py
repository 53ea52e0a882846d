"""Command-line interface: ``rdio {gen,infer,evaluate,sweep,verify}``.

Exit codes: 0 success, 1 input error, 2 solver limit, 3 certificate failure.

Config files are JSON documents with optional sections ``forward``
(``known`` region and ``objective``), ``rdio`` (inverse-model settings),
``solver`` (backend, limits) and ``preset`` (``"rt"`` selects the
radiotherapy forward model).  Command-line flags override file values.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import io as rio
from .datagen import (load_base_plans, planted_instance, rt_forward_config,
                      synthesize_cohort)
from .errors import AuditError, CertificateError, InputError, NumericalError
from .harness import (ForwardConfig, classify, default_fractions, metrics, sweep)
from .inference import (InferenceResult, RdioConfig, audit_model_size, build_rdio,
                        dio_certificate, infer_constraints, verify_optimality)
from .milp.branch import SolverOptions
from .model import Objective, Region

log = logging.getLogger("rdio")

EXIT_OK, EXIT_INPUT, EXIT_LIMIT, EXIT_CERT = 0, 1, 2, 3


class SolverLimit(Exception):
    pass


# ----------------------------------------------------------------------
# configuration


def _load_config(path):
    if path is None:
        return {}
    cfg = rio.read_json(path)
    if not isinstance(cfg, dict):
        raise InputError(f"{path}: config must be a JSON object")
    return cfg


def _forward(cfg, m):
    if cfg.get("preset") == "rt":
        known, obj, _ = rt_forward_config(m)
        return ForwardConfig(known, obj)
    if "forward" in cfg:
        fc = ForwardConfig.from_dict(cfg["forward"])
        if fc.objective.dim != m:
            raise InputError("config objective dimension does not match the dataset")
        return fc
    return ForwardConfig(Region(), Objective.linear(np.ones(m)))


def _rdio_config(cfg, args):
    d = dict(cfg.get("rdio", {}))
    if cfg.get("preset") == "rt":
        d.setdefault("num_linear", 10)
        d.setdefault("normalization", "l1proxy")
    if getattr(args, "lconstraints", None) is not None:
        d["num_linear"] = args.lconstraints
    if getattr(args, "epsilon", None) is not None:
        d["epsilon"] = args.epsilon
    if getattr(args, "big_m", None) is not None:
        d["big_m"] = args.big_m if args.big_m == "auto" else float(args.big_m)
    if getattr(args, "normalization", None) is not None:
        d["normalization"] = args.normalization
    try:
        return RdioConfig.from_dict(d)
    except TypeError as exc:
        raise InputError(f"bad rdio config: {exc}") from None


def _solver_options(cfg, args):
    d = {"backend": "highs"}
    d.update(cfg.get("solver", {}))
    if getattr(args, "time_limit", None) is not None:
        d["time_limit"] = args.time_limit
    if getattr(args, "backend", None) is not None:
        d["backend"] = args.backend
    try:
        return SolverOptions(**d)
    except TypeError as exc:
        raise InputError(f"bad solver config: {exc}") from None


def _emit(obj, out):
    if out is None:
        sys.stdout.write(json.dumps(obj, indent=2, default=rio._default) + "\n")
    else:
        rio.write_json(obj, out)


# ----------------------------------------------------------------------
# commands


def cmd_gen(args) -> int:
    if args.planted == args.cohort:
        raise InputError("choose exactly one of --planted or --cohort")
    if args.planted:
        n_true = args.n_true if args.n_true is not None else 2 * args.m
        pi = planted_instance(args.m, n_true, args.n_acc, args.n_rej, args.seed,
                              n_known=args.n_known)
        rio.write_dataset(pi.dataset, args.out)
        if args.config_out:
            rio.write_json({"forward": ForwardConfig(pi.known, pi.objective).to_dict(),
                            "truth": pi.true_region.to_dict()}, args.config_out)
    else:
        base = rio.read_dataset(args.base) if args.base else load_base_plans()
        cohort = synthesize_cohort(base, args.per_base, args.perturb, args.seed)
        if cohort.clipped.any():
            log.warning("%d coordinates clipped at zero", int(cohort.clipped.sum()))
        rio.write_dataset(cohort.dataset, args.out)
    log.info("wrote %s", args.out)
    return EXIT_OK


def cmd_infer(args) -> int:
    cfg = _load_config(args.config)
    ds = rio.read_dataset(args.data)
    fc = _forward(cfg, ds.m)
    rc = _rdio_config(cfg, args)
    res = infer_constraints(ds, fc.known, fc.objective, rc, _solver_options(cfg, args))
    if res.status == "infeasible":
        raise InputError("inverse model is infeasible; check well-posedness of the data")
    if res.has_solution:
        _emit(res.to_dict(), args.out)
    log.info("status %s, objective %s", res.status, res.objective_value)
    if res.status != "optimal":
        raise SolverLimit(res.status)
    return EXIT_OK


def _load_result(path) -> InferenceResult:
    try:
        return InferenceResult.from_dict(rio.read_json(path))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: malformed result file ({exc})") from None


def cmd_evaluate(args) -> int:
    res = _load_result(args.result)
    ds = rio.read_dataset(args.data)
    if not res.has_solution:
        raise InputError("result holds no inferred region")
    cm = classify(res.region(with_tangent=not args.no_tangent), ds)
    _emit({"confusion": cm.to_dict(), "metrics": metrics(cm)}, args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load_config(args.config)
    ds = rio.read_dataset(args.data)
    fc = _forward(cfg, ds.m)
    rc = _rdio_config(cfg, args)
    hcfg = cfg.get("harness", {})
    if args.train_frac is not None:
        fractions = [args.train_frac]
        trials = 50
    else:
        fractions = hcfg.get("fractions", default_fractions())
        trials = hcfg.get("trials", 20)
    if args.paper_scale:
        trials = 50 if args.train_frac is not None else 250
    if args.trials is not None:
        trials = args.trials
    res = sweep(ds, fractions, trials, rc, fc, seed=args.seed,
                options=_solver_options(cfg, args), workers=args.workers)
    out = Path(args.out)
    rio.write_json(res.to_dict(), out)
    rio.atomic_write_text(out.with_suffix(".csv"), res.to_csv())
    for f, a in res.aggregates().items():
        acc = a["accuracy"]
        log.info("fraction %.2f: accuracy %s (%d/%d optimal)", f,
                 "n/a" if acc["mean"] is None else f"{acc['mean']:.3f} +- {acc['std']:.3f}",
                 a["optimal"], a["trials"])
    return EXIT_OK


def cmd_verify(args) -> int:
    res = _load_result(args.result)
    if res.status != "optimal":
        raise CertificateError(f"result status is {res.status}, not optimal", "status")
    cert = dio_certificate(res)
    region = res.region(with_tangent=True)
    ok = verify_optimality(region, res.objective, res.x0)
    report = {"certificate": cert.to_dict(), "optimal": bool(ok)}
    if not ok:
        _emit(report, args.out)
        raise CertificateError("x0 is not optimal over the inferred region", "optimality")
    if args.data:
        ds = rio.read_dataset(args.data)
        if res.config is None:
            raise InputError("result lacks its config; cannot rebuild the model for the audit")
        rm = build_rdio(ds, res.known, res.x0, res.objective, RdioConfig.from_dict(res.config))
        report["audit"] = audit_model_size(rm)
    _emit(report, args.out)
    return EXIT_OK


# ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rdio", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, data=True):
        if data:
            sp.add_argument("--data", required=True, help="dataset CSV")
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--out", help="output path")
        sp.add_argument("--seed", type=int, default=0)

    def model_flags(sp):
        sp.add_argument("--lconstraints", type=int, help="number of inferred linear rows")
        sp.add_argument("--epsilon", type=float)
        sp.add_argument("--big-m", dest="big_m", help="big-M value or 'auto'")
        sp.add_argument("--normalization", choices=["coefficient_box", "l1proxy"])
        sp.add_argument("--time-limit", dest="time_limit", type=float)
        sp.add_argument("--backend", choices=["builtin", "highs"])

    g = sub.add_parser("gen", help="write a synthetic dataset")
    common(g, data=False)
    g.add_argument("--planted", action="store_true")
    g.add_argument("--cohort", action="store_true")
    g.add_argument("--m", type=int, default=2)
    g.add_argument("--n-true", dest="n_true", type=int)
    g.add_argument("--n-acc", dest="n_acc", type=int, default=30)
    g.add_argument("--n-rej", dest="n_rej", type=int, default=12)
    g.add_argument("--n-known", dest="n_known", type=int, default=0)
    g.add_argument("--config-out", dest="config_out", help="write the forward config here")
    g.add_argument("--base", help="base-plan CSV (defaults to the packaged demo plans)")
    g.add_argument("--per-base", dest="per_base", type=int, default=20)
    g.add_argument("--perturb", type=float, default=0.2)
    g.set_defaults(func=cmd_gen)

    i = sub.add_parser("infer", help="infer constraints from a dataset")
    common(i)
    model_flags(i)
    i.set_defaults(func=cmd_infer)

    e = sub.add_parser("evaluate", help="classify a dataset with a stored result")
    common(e)
    e.add_argument("--result", required=True)
    e.add_argument("--no-tangent", dest="no_tangent", action="store_true")
    e.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("sweep", help="repeated train/test trials over fractions")
    common(s)
    model_flags(s)
    s.add_argument("--train-frac", dest="train_frac", type=float)
    s.add_argument("--trials", type=int)
    s.add_argument("--paper-scale", dest="paper_scale", action="store_true")
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_sweep)

    v = sub.add_parser("verify", help="check the certificate of a stored result")
    v.add_argument("--result", required=True)
    v.add_argument("--data", help="dataset CSV (enables the model-size audit)")
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(message)s")
    if getattr(args, "out", None) is None and args.command in ("gen", "sweep"):
        parser.error(f"{args.command} requires --out")
    try:
        return args.func(args)
    except SolverLimit as exc:
        return _fail(EXIT_LIMIT, f"solver stopped early ({exc})")
    except (CertificateError, AuditError) as exc:
        return _fail(EXIT_CERT, f"certificate failure: {exc}")
    except InputError as exc:
        return _fail(EXIT_INPUT, str(exc))
    except NumericalError as exc:
        return _fail(EXIT_LIMIT, f"numerical failure: {exc}")


def _fail(code, msg):
    sys.stderr.write(f"rdio: error: {msg}\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
