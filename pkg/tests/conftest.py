import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rdio.milp.model import MilpModel

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_milp(rng, n_bin=None, n_cont=None, n_rows=None):
    """Small bounded MILP that always has the all-zero point available.

    Rows are ``<=`` with nonnegative right-hand sides so ``x = 0`` is
    feasible; a few ``>=`` rows are added that may make it infeasible.
    """
    n_bin = int(rng.integers(1, 13)) if n_bin is None else n_bin
    n_cont = int(rng.integers(0, 4)) if n_cont is None else n_cont
    n_rows = int(rng.integers(1, 7)) if n_rows is None else n_rows
    mm = MilpModel(maximize=bool(rng.integers(2)))
    xs = [mm.add_var(f"y{i}", 0, 1, binary=True) for i in range(n_bin)]
    xs += [mm.add_var(f"x{i}", 0, float(rng.uniform(1, 5))) for i in range(n_cont)]
    for r in range(n_rows):
        coeffs = {j: float(v) for j, v in zip(xs, rng.integers(-5, 6, len(xs))) if v}
        if not coeffs:
            continue
        if rng.random() < 0.2:
            mm.add_row(coeffs, ">=", float(rng.integers(-3, 3)))
        else:
            mm.add_row(coeffs, "<=", float(rng.integers(0, 8)))
    mm.set_objective({j: float(v) for j, v in zip(xs, rng.normal(size=len(xs)))})
    return mm


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in range(1, 11):
        if n in mod.RESULTS:
            ok, detail = mod.RESULTS[n]
            tr.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        else:
            tr.write_line(f"criterion {n:2d}: FAIL  (not run or raised before reporting)")
