import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from rdio.errors import DegenerateGradientError, InputError
from rdio.geometry import (check_well_posed, hull_membership, hull_weights,
                           preferred_solution, sublevel_contains, tangent_halfspace)
from rdio.model import Dataset, LinearConstraint, Objective, Region

TRI = [(0, 0), (1, 0), (0, 1)]
point_sets = arrays(np.float64, st.tuples(st.integers(1, 8), st.integers(1, 4)),
                    elements=st.floats(-50, 50, allow_nan=False, width=32))


def test_hull_examples():
    assert hull_membership((0.5, 0.5), TRI)
    assert not hull_membership((2, 2), TRI)
    assert hull_membership((1, 0), [(0, 0), (2, 0), (1, 3)])
    w = hull_weights((1, 0), [(0, 0), (2, 0), (1, 3)])
    np.testing.assert_allclose(w @ np.array([(0, 0), (2, 0), (1, 3)]), [1, 0], atol=1e-9)


def test_hull_errors():
    with pytest.raises(InputError):
        hull_membership((1, 2, 3), TRI)
    with pytest.raises(InputError):
        hull_membership((1, 2), np.zeros((0, 2)))


@given(point_sets)
def test_every_point_and_the_mean_lie_in_the_hull(P):
    for p in P:
        assert hull_membership(p, P)
    assert hull_membership(P.mean(axis=0), P)


@given(point_sets)
def test_far_point_is_outside(P):
    x = P.max(axis=0) + 1.0
    assert not hull_membership(x, P)


def test_preferred_solution_examples():
    x0, w = preferred_solution([(1, 2), (3, 1), (2, 0)], Objective.linear([1, 0]))
    np.testing.assert_array_equal(x0, [1, 2])
    x0, _ = preferred_solution([(0, 0), (1, 0)], Objective.linear([0, 1]))
    np.testing.assert_array_equal(x0, [0, 0])
    x0, w = preferred_solution([(2, 0), (1, 1), (0, 2)], Objective.quadratic(np.eye(2)))
    np.testing.assert_allclose(x0, [1, 1], atol=1e-6)


def _grid_min(P, f, n):
    """Minimise ``f(w @ P)`` over a barycentric grid of the triangle."""
    i, j = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="ij")
    keep = i + j <= n
    W = np.stack([i[keep], j[keep], n - i[keep] - j[keep]], axis=1) / n
    X = W @ P
    k = np.argmin(f(X))
    return W[k], X[k]


@pytest.mark.parametrize("seed", range(5))
def test_quadratic_preferred_solution_matches_grid_search(seed):
    rng = np.random.default_rng(seed)
    P = rng.uniform(1, 4, size=(3, 2))  # positive orthant: origin never inside
    f = lambda X: (X ** 2).sum(axis=1)
    w0, _ = _grid_min(P, f, 400)
    # refine on a fine grid around the coarse optimum
    best = None
    for a in np.linspace(max(0, w0[0] - 0.01), min(1, w0[0] + 0.01), 401):
        b = np.clip(np.linspace(w0[1] - 0.01, w0[1] + 0.01, 401), 0, 1 - a)
        X = np.outer(a, P[0]) + np.outer(b, P[1]) + np.outer(1 - a - b, P[2])
        k = np.argmin(f(X))
        if best is None or f(X[k:k + 1])[0] < best[0]:
            best = (f(X[k:k + 1])[0], X[k])
    x0, w = preferred_solution(P, Objective.quadratic(np.eye(2)))
    assert np.abs(x0 - best[1]).max() <= 1e-4
    np.testing.assert_allclose(w @ P, x0, atol=1e-9)
    assert w.min() >= -1e-12 and abs(w.sum() - 1) <= 1e-12


@given(point_sets, st.integers(0, 1000))
def test_preferred_solution_properties(P, seed):
    rng = np.random.default_rng(seed)
    m = P.shape[1]
    if seed % 2:
        obj = Objective.linear(rng.normal(size=m))
    else:
        B = rng.normal(size=(m, m))
        obj = Objective(rng.normal(size=m), B @ B.T + 0.1 * np.eye(m))
    x0, w = preferred_solution(P, obj)
    assert hull_membership(x0, P, tol=1e-7)
    scale = 1 + np.abs(P).max() ** 2
    for p in P:
        assert obj.value(x0) <= obj.value(p) + 1e-7 * scale
        assert sublevel_contains(obj, x0, p, tol=1e-7 * scale)
    g = obj.grad(x0)
    if np.abs(g).max() > 1e-8:
        C = tangent_halfspace(obj, x0)
        for p in P:
            assert C.slack(p) >= -1e-6 * scale


def test_tangent_examples():
    C = tangent_halfspace(Objective.quadratic(np.eye(2)), [1, 1])
    np.testing.assert_allclose(C.normal, [2, 2])
    assert C.offset == pytest.approx(4.0)
    assert C.slack([1, 1]) == 0.0
    C = tangent_halfspace(Objective.linear([1, -1]), [3, 5])
    np.testing.assert_allclose(C.normal, [1, -1])
    assert C.offset == pytest.approx(-2.0)
    with pytest.raises(DegenerateGradientError):
        tangent_halfspace(Objective.quadratic(np.eye(2)), [0, 0])


def test_sublevel_examples():
    f = Objective.quadratic(np.eye(2))
    assert sublevel_contains(f, [1, 1], [2, 0])
    assert not sublevel_contains(f, [1, 1], [0.5, 0.5])
    assert sublevel_contains(f, [1, 1], [1, 1])


@given(st.integers(0, 10_000))
def test_tangent_equals_sublevel_for_linear_objectives(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, 5))
    obj = Objective.linear(rng.normal(size=m))
    x0 = rng.normal(size=m)
    C = tangent_halfspace(obj, x0)
    X = rng.normal(size=(1000, m)) * 3
    for x in X:
        assert C.contains(x) == sublevel_contains(obj, x0, x)


def test_well_posed_examples():
    nonneg = Region([LinearConstraint([1, 0], 0), LinearConstraint([0, 1], 0)])
    ds = Dataset.from_groups([(1, 1)], [(5, 5)])
    assert check_well_posed(ds, nonneg).overall
    ds = Dataset.from_groups([(1, 1), (2, 0)], [(1, 1)])
    rep = check_well_posed(ds, Region())
    assert not rep.overall
    assert rep.failures()[0][:2] == ("c", 0)
    rep = check_well_posed(Dataset.from_groups([(-1, 0)], []), Region([LinearConstraint([1, 0], 0)]))
    assert not rep.overall and rep.failures()[0][0] == "b"


def test_well_posed_template_condition():
    from rdio.model import NonlinearTemplate
    # g = q * (-x^2) + r with q >= 0.5 and r <= 0 is negative at every x
    t = NonlinearTemplate((lambda x: -x[0] ** 2, lambda x: 1.0), (True, False), [0.5, -1], [1, 0])
    rep = check_well_posed(Dataset.from_groups([(1.0,)], []), Region(), [t])
    assert not rep.overall and rep.failures()[0][0] == "a"
