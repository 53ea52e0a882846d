"""HiGHS backend for large instances; same contract as the builtin solver."""

from __future__ import annotations

import time

import highspy
import numpy as np

from .branch import MilpSolution, SolverOptions
from .model import MilpModel

_INF = highspy.kHighsInf


def _finite(v):
    return v if np.isfinite(v) else (_INF if v > 0 else -_INF)


def solve_highs(milp: MilpModel, options: SolverOptions, incumbent=None) -> MilpSolution:
    start = time.perf_counter()
    h = highspy.Highs()
    h.setOptionValue("output_flag", bool(options.verbose))
    h.setOptionValue("mip_rel_gap", float(options.gap_tol))
    h.setOptionValue("mip_abs_gap", 1e-9)
    h.setOptionValue("mip_feasibility_tolerance", float(min(options.int_tol, 1e-6)))
    h.setOptionValue("primal_feasibility_tolerance", 1e-9)
    h.setOptionValue("dual_feasibility_tolerance", 1e-9)
    h.setOptionValue("threads", 1)
    h.setOptionValue("random_seed", 0)
    if options.time_limit is not None:
        h.setOptionValue("time_limit", float(options.time_limit))
    if options.node_limit is not None:
        h.setOptionValue("mip_max_nodes", int(options.node_limit))

    n = milp.num_vars
    lp = highspy.HighsLp()
    lp.num_col_ = n
    lp.num_row_ = milp.num_rows
    lp.col_cost_ = milp.cost_vector()
    lp.col_lower_ = np.array([_finite(v) for v in milp.lower])
    lp.col_upper_ = np.array([_finite(v) for v in milp.upper])
    rlo = np.empty(milp.num_rows)
    rhi = np.empty(milp.num_rows)
    for i, row in enumerate(milp.rows):
        rlo[i] = row.rhs if row.sense in (">=", "==") else -_INF
        rhi[i] = row.rhs if row.sense in ("<=", "==") else _INF
    lp.row_lower_ = rlo
    lp.row_upper_ = rhi
    A = milp.matrix().tocsc()
    lp.a_matrix_.format_ = highspy.MatrixFormat.kColwise
    lp.a_matrix_.start_ = A.indptr.astype(np.int32)
    lp.a_matrix_.index_ = A.indices.astype(np.int32)
    lp.a_matrix_.value_ = A.data.astype(float)
    lp.sense_ = highspy.ObjSense.kMaximize if milp.maximize else highspy.ObjSense.kMinimize
    lp.integrality_ = [highspy.HighsVarType.kInteger if b else highspy.HighsVarType.kContinuous
                       for b in milp.integer]
    h.passModel(lp)
    if incumbent is not None:
        sol = highspy.HighsSolution()
        sol.col_value = list(np.asarray(incumbent, float))
        sol.value_valid = True
        h.setSolution(sol)
    h.run()

    status = h.getModelStatus()
    info = h.getInfo()
    wall = time.perf_counter() - start
    nodes = int(getattr(info, "mip_node_count", 0))
    has_sol = info.primal_solution_status == 2  # kSolutionStatusFeasible
    x = np.array(h.getSolution().col_value) if has_sol else None
    if x is not None and milp.binaries.size:
        x[milp.binaries] = np.round(x[milp.binaries])
    M = highspy.HighsModelStatus
    if status == M.kOptimal:
        code = "optimal"
    elif status == M.kInfeasible:
        code = "infeasible"
    elif status in (M.kUnbounded, M.kUnboundedOrInfeasible):
        code = "unbounded"
    else:
        code = "limit_reached"
    obj = milp.evaluate(x) if x is not None else None
    bound = getattr(info, "mip_dual_bound", None)
    return MilpSolution(code, x, obj, bound, nodes, 0, wall, backend="highs",
                        stats={"model_status": h.modelStatusToString(status)})
