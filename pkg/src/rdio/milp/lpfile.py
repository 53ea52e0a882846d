"""Export a :class:`MilpModel` in CPLEX LP text format."""

from __future__ import annotations

import re

import numpy as np

from .model import MilpModel


def _num(v: float) -> str:
    return format(float(v), ".17g")


def _name(raw: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.]", "_", raw)


def _terms(pairs) -> str:
    out = []
    for j, v in pairs:
        sign = "-" if v < 0 else "+"
        out.append(f"{sign} {_num(abs(v))} x{j}")
    return " ".join(out) if out else "0 x0"


def to_lp_text(milp: MilpModel) -> str:
    """Coefficients are printed with 17 significant digits (round-trip exact).

    Variables are emitted as ``x<index>``; a comment block maps each index to
    its family name.
    """
    lines = [f"\\ {milp.name}"]
    for j, nm in enumerate(milp.names):
        lines.append(f"\\ x{j} = {_name(nm)}")
    lines.append("Maximize" if milp.maximize else "Minimize")
    lines.append(" obj: " + _terms(sorted(milp.objective.items())))
    lines.append("Subject To")
    op = {"<=": "<=", ">=": ">=", "==": "="}
    for i, row in enumerate(milp.rows):
        body = _terms(zip(row.idx, row.val))
        lines.append(f" r{i}_{_name(row.group)}: {body} {op[row.sense]} {_num(row.rhs)}")
    lines.append("Bounds")
    for j, (lo, hi) in enumerate(zip(milp.lower, milp.upper)):
        if milp.integer[j]:
            lines.append(f" {_num(lo)} <= x{j} <= {_num(hi)}")
            continue
        lo_s = "-inf" if not np.isfinite(lo) else _num(lo)
        hi_s = "+inf" if not np.isfinite(hi) else _num(hi)
        if lo_s == "-inf" and hi_s == "+inf":
            lines.append(f" x{j} free")
        else:
            lines.append(f" {lo_s} <= x{j} <= {hi_s}")
    bins = [f"x{j}" for j in milp.binaries]
    if bins:
        lines.append("Binaries")
        for k in range(0, len(bins), 10):
            lines.append(" " + " ".join(bins[k:k + 10]))
    lines.append("End")
    return "\n".join(lines) + "\n"


def write_lp(milp: MilpModel, path) -> None:
    with open(path, "w") as fh:
        fh.write(to_lp_text(milp))
