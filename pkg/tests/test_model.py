import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import minimize

from rdio.datagen import planted_instance
from rdio.errors import InputError, UnsupportedError
from rdio.geometry import hull_membership, preferred_solution, tangent_halfspace
from rdio.model import (Dataset, Halfspace, LinearConstraint, NonlinearTemplate, Objective,
                        Region, affine_template, eval_nonlinear, hit_and_run, is_imputed,
                        is_nominal, region_contains, separable_quadratic, template_from_spec)

ONE = lambda x: 1.0


def example1():
    """f = |x|^2, x0 = (1, 1), known 2 x1 - 3 x2 <= 4, ellipse (x1-2)^2 + 2 (x2-2)^2 <= 6."""
    f = Objective.quadratic(np.eye(2))
    known = LinearConstraint([-2.0, 3.0], -4.0)
    ellipse = (separable_quadratic(2), np.array([1.0, 2.0, 4.0, 8.0, -6.0]))
    region = Region([known], [], [], [ellipse])
    ds = Dataset.from_groups([(1, 1), (2, 2), (3, 2), (2, 3), (1.5, 2.5)],
                             [(0, 0), (4, 4), (-1, 3), (4, 0.5)])
    return f, region, ds, np.array([1.0, 1.0])


def test_objective_validation():
    with pytest.raises(InputError):
        Objective([1, 0], [[1, 1], [0, 1]])
    with pytest.raises(UnsupportedError):
        Objective.quadratic([[1, 0], [0, -1]])
    f = Objective.quadratic(np.zeros((2, 2)), [1, 2])
    assert f.Q is None and f.kind == "linear"
    g = Objective([1, 0], [[2, 0], [0, 1]])
    np.testing.assert_allclose(g.grad([1, 1]), [5, 2])
    assert g.value([1, 1]) == pytest.approx(4.0)
    assert Objective.from_dict(g.to_dict()).value([1, 1]) == pytest.approx(4.0)


def test_linear_constraint_needs_nonzero_normal():
    with pytest.raises(InputError):
        LinearConstraint([0, 0], 1)


def test_eval_nonlinear_examples():
    t = NonlinearTemplate((ONE, lambda x: x[0], lambda x: x[1]), (False,) * 3, -10, 10)
    assert eval_nonlinear(t, [4, 2, -3], [1, 1]) == pytest.approx(3.0)
    t2 = NonlinearTemplate((lambda x: -x[0] ** 2, lambda x: -x[1] ** 2, ONE),
                           (True, True, False), [0, 0, -10], 10)
    assert eval_nonlinear(t2, [1, 2, 6], [2, 2]) == pytest.approx(-6.0)
    assert eval_nonlinear(t2, [0, 0, 0], [7, -3]) == 0.0
    with pytest.raises(InputError):
        eval_nonlinear(t2, [-1, 0, 0], [0, 0])


def test_concave_basis_needs_nonnegative_parameter():
    with pytest.raises(InputError):
        NonlinearTemplate((lambda x: -x[0] ** 2,), (True,), -1, 1)


def test_template_spec_round_trip():
    for t in (separable_quadratic(3, 5.0), affine_template(2)):
        u = template_from_spec(t.spec)
        x = np.array([0.3, -1.2, 2.0])[: t.spec["m"]]
        np.testing.assert_allclose(u.features(x), t.features(x))
    with pytest.raises(UnsupportedError):
        template_from_spec({"kind": "cubic"})


def test_template_gradient_matches_finite_differences(rng):
    t = separable_quadratic(3)
    q = rng.uniform(t.lower, t.upper)
    x = rng.normal(size=3)
    bare = NonlinearTemplate(t.basis, t.concave, t.lower, t.upper)
    np.testing.assert_allclose(t.gradient(q, x), bare.gradient(q, x), atol=1e-6)


@pytest.mark.parametrize("template", [
    separable_quadratic(2),
    separable_quadratic(3, 2.0),
    NonlinearTemplate((lambda x: -np.abs(x[0]), lambda x: -np.exp(x[1]), lambda x: x[0], ONE),
                      (True, True, False, False), [0, 0, -3, -3], [2, 1, 3, 3]),
], ids=["sq2", "sq3", "abs-exp"])
def test_admissible_parameters_give_concave_functions(template, rng):
    m = 3 if template.param_dim == 7 else 2
    worst = np.inf
    for _ in range(1000):
        q = rng.uniform(template.lower, template.upper)
        x, y = rng.normal(size=m) * 3, rng.normal(size=m) * 3
        t = rng.uniform()
        lhs = eval_nonlinear(template, q, t * x + (1 - t) * y)
        rhs = t * eval_nonlinear(template, q, x) + (1 - t) * eval_nonlinear(template, q, y)
        worst = min(worst, lhs - rhs)
    assert worst >= -1e-9


def test_region_contains_examples():
    assert region_contains(Region(), [3.0, -7.0])
    rt = Region([LinearConstraint(np.eye(3)[0], 10.0)])
    assert not region_contains(rt, [9.0, 0.0, 0.0])
    assert region_contains(Region([LinearConstraint([1, 1], 2)]), [1, 1])


def test_region_tangent_and_serialisation():
    f, region, ds, x0 = example1()
    C = tangent_halfspace(f, x0)
    r = region.with_tangent(C)
    assert r.tangent is not None and r.without_tangent().tangent is None
    assert r.linear_rows[-1].a.tolist() == C.normal.tolist()
    back = Region.from_dict(r.to_dict())
    for x in ds.points:
        assert back.contains(x) == r.contains(x)
    assert not r.contains([0.9, 0.9])


def test_dataset_validation():
    ds = Dataset(np.zeros((2, 2)), ["accepted", "rejected"])
    assert ds.labels.tolist() == [True, False]
    with pytest.raises(InputError):
        Dataset(np.zeros((2, 2)), [True])
    with pytest.raises(InputError):
        Dataset(np.zeros((1, 2)), ["maybe"])
    assert ds.scaled(2.0).points.shape == (2, 2)


def test_nominal_examples():
    f, region, ds, x0 = example1()
    assert is_nominal(region, ds)
    wide = Region([LinearConstraint([1, 0], -100)])
    assert not is_nominal(wide, ds)  # contains the rejected points
    narrow = Region([LinearConstraint([1, 0], 1.8)])
    assert not is_nominal(narrow, ds)  # excludes (1, 1)


def test_example1_imputed_only_with_tangent():
    f, region, ds, x0 = example1()
    x_pref, _ = preferred_solution(ds.accepted, f)
    np.testing.assert_allclose(x_pref, x0, atol=1e-9)
    assert is_imputed(region, ds, f, x0) is False
    assert is_imputed(region.with_tangent(tangent_halfspace(f, x0)), ds, f, x0) is True


def test_linear_polytope_with_unique_optimum_is_imputed():
    # unit square, c = (1, 1): x0 = (0, 0) is the unique LP optimum
    sq = Region(inferred_linear=[LinearConstraint([1, 0], 0), LinearConstraint([0, 1], 0),
                                 LinearConstraint([-1, 0], -1), LinearConstraint([0, -1], -1)])
    ds = Dataset.from_groups([(0, 0), (1, 1), (0.5, 0.2)], [(2, 2), (-1, 0.5)])
    assert is_imputed(sq, ds, Objective.linear([1, 1]), [0, 0])
    assert not is_imputed(sq, ds, Objective.linear([1, 1]), [1, 1])


def _random_objective(rng, m):
    if rng.random() < 0.5:
        return Objective.linear(rng.normal(size=m))
    B = rng.normal(size=(m, m))
    return Objective(rng.normal(size=m) * 3, B @ B.T + 0.1 * np.eye(m))


@settings(max_examples=15)
@given(st.integers(0, 10_000))
def test_nominal_region_with_tangent_is_imputed(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 4))
    pi = planted_instance(m, m + 2, 12, 6, seed)
    truth = pi.true_region
    assert is_nominal(truth, pi.dataset)
    f = _random_objective(rng, m)
    x0, _ = preferred_solution(pi.dataset.accepted, f)
    if np.abs(f.grad(x0)).max() < 1e-8:
        return
    imputed = truth.with_tangent(tangent_halfspace(f, x0))
    assert is_imputed(imputed, pi.dataset, f, x0)
    assert is_nominal(imputed, pi.dataset)


@pytest.mark.parametrize("seed", range(4))
def test_imputed_region_lies_in_tangent_halfspace(seed):
    rng = np.random.default_rng(seed)
    pi = planted_instance(2, 5, 5, 0, seed)
    P = pi.true_region
    A = np.array([c.a for c in P.inferred_linear])
    b = np.array([c.b for c in P.inferred_linear])
    target = pi.box[0] - 1.0  # below-left of the polytope, so the constraint binds
    Q = np.diag(rng.uniform(0.5, 2.0, 2))
    f = Objective(-2 * Q @ target, Q)  # (x - t)' Q (x - t) up to a constant
    res = minimize(f.value, pi.dataset.accepted.mean(axis=0), jac=f.grad, method="SLSQP",
                   constraints=[{"type": "ineq", "fun": lambda x: A @ x - b, "jac": lambda x: A}],
                   options={"ftol": 1e-14, "maxiter": 500})
    x0 = res.x
    acc = [x0] + list(hit_and_run(P, pi.dataset.accepted[0], 6, rng))
    rej = [x for x in rng.uniform(pi.box[0] - 1, pi.box[1] + 1, size=(40, 2))
           if not P.contains(x, 0.0) and not hull_membership(x, np.array(acc))][:5]
    ds = Dataset.from_groups(acc, rej)
    x_pref, _ = preferred_solution(ds.accepted, f)
    assert np.abs(x_pref - x0).max() <= 1e-5
    assert is_imputed(P, ds, f, x0)
    C = Halfspace(f.grad(x0), float(f.grad(x0) @ x0))
    samples = hit_and_run(P, ds.accepted[1], 1000, rng)
    assert len(samples) == 1000
    assert min(C.slack(x) for x in samples) >= -1e-7
