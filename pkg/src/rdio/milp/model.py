"""Mixed-integer linear model container with named variable families."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np
from scipy import sparse

from ..errors import InputError
from .simplex import LpModel


@dataclass
class Row:
    idx: np.ndarray
    val: np.ndarray
    sense: str
    rhs: float
    group: str


@dataclass
class MilpModel:
    """A MILP built incrementally.

    Variables are registered in families (``add_vars("a", (3, 2))``); the
    index arrays are kept in ``index`` so callers can map solutions back onto
    structured values.  Every row and variable carries a ``group`` tag, which
    the model-size audit uses to tally formulation blocks.
    """

    name: str = "model"
    maximize: bool = False
    lower: list = field(default_factory=list)
    upper: list = field(default_factory=list)
    integer: list = field(default_factory=list)
    names: list = field(default_factory=list)
    var_group: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    objective: dict = field(default_factory=dict)
    index: dict = field(default_factory=dict)

    @property
    def num_vars(self) -> int:
        return len(self.lower)

    @property
    def num_rows(self) -> int:
        return len(self.rows)

    @property
    def binaries(self) -> np.ndarray:
        return np.flatnonzero(self.integer)

    def add_var(self, name, lower=0.0, upper=np.inf, binary=False, group=None) -> int:
        if binary:
            lower, upper = max(0.0, float(lower)), min(1.0, float(upper))
        if lower > upper:
            raise InputError(f"variable {name}: lower bound exceeds upper bound")
        self.lower.append(float(lower))
        self.upper.append(float(upper))
        self.integer.append(bool(binary))
        self.names.append(name)
        self.var_group.append(group or name)
        return len(self.lower) - 1

    def add_vars(self, family, shape, lower=0.0, upper=np.inf, binary=False,
                 group=None) -> np.ndarray:
        shape = tuple(np.atleast_1d(shape))
        out = np.empty(shape, dtype=int)
        for pos in np.ndindex(*shape):
            tag = ",".join(str(p) for p in pos)
            out[pos] = self.add_var(f"{family}[{tag}]", lower, upper, binary,
                                    group or family)
        self.index[family] = out
        return out

    def add_row(self, coeffs, sense, rhs, group="row"):
        """Add ``sum coeffs (sense) rhs``; ``coeffs`` maps var index -> value."""
        if sense not in ("<=", ">=", "=="):
            raise InputError(f"unknown sense {sense!r}")
        acc = defaultdict(float)
        for j, v in (coeffs.items() if isinstance(coeffs, dict) else coeffs):
            j = int(j)
            if not 0 <= j < self.num_vars:
                raise InputError(f"row references undeclared variable {j}")
            acc[j] += float(v)
        idx = np.fromiter(acc.keys(), dtype=int, count=len(acc))
        val = np.fromiter(acc.values(), dtype=float, count=len(acc))
        keep = val != 0.0
        self.rows.append(Row(idx[keep], val[keep], sense, float(rhs), group))
        return len(self.rows) - 1

    def set_objective(self, coeffs, maximize=None):
        self.objective = {int(j): float(v) for j, v in
                          (coeffs.items() if isinstance(coeffs, dict) else coeffs)}
        if maximize is not None:
            self.maximize = bool(maximize)

    # -- views ----------------------------------------------------------
    def cost_vector(self) -> np.ndarray:
        c = np.zeros(self.num_vars)
        for j, v in self.objective.items():
            c[j] += v
        return c

    def matrix(self) -> sparse.csr_matrix:
        data, ri, ci = [], [], []
        for i, row in enumerate(self.rows):
            data.extend(row.val)
            ci.extend(row.idx)
            ri.extend([i] * row.idx.size)
        return sparse.csr_matrix((data, (ri, ci)), shape=(self.num_rows, self.num_vars))

    def relaxation(self, lower=None, upper=None) -> LpModel:
        """Dense LP relaxation, optionally with overriding bound vectors."""
        return LpModel(
            c=self.cost_vector(),
            A=self.matrix().toarray(),
            senses=[r.sense for r in self.rows],
            rhs=np.array([r.rhs for r in self.rows]),
            lower=np.asarray(self.lower if lower is None else lower, float),
            upper=np.asarray(self.upper if upper is None else upper, float),
            maximize=self.maximize,
        )

    def evaluate(self, x) -> float:
        return float(self.cost_vector() @ np.asarray(x, float))

    def residual(self, x, int_tol: Optional[float] = None) -> float:
        """Largest row/bound violation at ``x`` (integrality too if ``int_tol``)."""
        x = np.asarray(x, float)
        worst = 0.0
        for row in self.rows:
            lhs = float(row.val @ x[row.idx])
            if row.sense == "<=":
                v = lhs - row.rhs
            elif row.sense == ">=":
                v = row.rhs - lhs
            else:
                v = abs(lhs - row.rhs)
            worst = max(worst, v)
        lo = np.asarray(self.lower)
        hi = np.asarray(self.upper)
        worst = max(worst, float(np.max(lo - x, initial=0.0)),
                    float(np.max(x - hi, initial=0.0)))
        if int_tol is not None and self.binaries.size:
            xb = x[self.binaries]
            frac = np.abs(xb - np.round(xb)).max()
            if frac > int_tol:
                worst = max(worst, frac)
        return worst

    def group_counts(self) -> dict:
        """Row counts per group tag."""
        out: dict = defaultdict(int)
        for row in self.rows:
            out[row.group] += 1
        return dict(out)

    def var_counts(self) -> dict:
        """Variable counts per (group, is_binary)."""
        out: dict = defaultdict(int)
        for g, b in zip(self.var_group, self.integer):
            out[(g, b)] += 1
        return dict(out)

    def rows_in(self, groups: Iterable[str]):
        groups = set(groups)
        return [r for r in self.rows if r.group in groups]
