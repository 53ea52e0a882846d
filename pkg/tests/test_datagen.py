import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rdio.datagen import (GUIDELINES, PRESCRIBED_DOSE, check_guidelines, guideline_table,
                          load_base_plans, load_guideline_mapping, planted_instance,
                          rt_forward_config, synthesize_cohort)
from rdio.errors import InputError
from rdio.geometry import check_well_posed, hull_membership


def test_cohort_size_bounds_and_determinism():
    base = load_base_plans()
    assert base.n == 5 and base.m == 14
    c = synthesize_cohort(base, 20, 0.2, seed=4)
    assert c.dataset.n == 105
    np.testing.assert_array_equal(c.dataset.points[::21], base.points)
    lo = np.minimum(base.points * 0.8, base.points * 1.2)[c.base_index]
    hi = np.maximum(base.points * 0.8, base.points * 1.2)[c.base_index]
    P = c.dataset.points
    assert np.all(P >= lo - 1e-12) and np.all(P <= hi + 1e-12)
    np.testing.assert_array_equal(c.dataset.labels, base.labels[c.base_index])
    again = synthesize_cohort(base, 20, 0.2, seed=4)
    np.testing.assert_array_equal(again.dataset.points, P)
    assert not np.array_equal(synthesize_cohort(base, 20, 0.2, seed=5).dataset.points, P)


def test_cohort_validation():
    base = load_base_plans()
    with pytest.raises(InputError):
        synthesize_cohort(base, 3, 1.5)
    with pytest.raises(InputError):
        synthesize_cohort(base, -1)


def test_cohort_is_well_posed_for_rt_model():
    known, obj, cfg = rt_forward_config()
    c = synthesize_cohort(load_base_plans(), 20, 0.2, seed=0)
    assert check_well_posed(c.dataset, known).overall
    assert cfg.num_linear == 10 and cfg.normalization == "l1proxy"
    assert np.flatnonzero(obj.c).tolist() == [9, 10]
    assert known.linear_rows[0].b == 10.0


def test_guideline_limits():
    limits = [g.limit for g in guideline_table()]
    assert limits == [40.28, 40.28, 39.01, 38.16, 38.16, 45.79, 21.20, 36.04]
    assert [g.sense for g in GUIDELINES] == ["min"] * 3 + ["max"] * 5
    assert round(0.95 * PRESCRIBED_DOSE, 2) == 40.28
    assert 1.08 * PRESCRIBED_DOSE == pytest.approx(45.792, abs=1e-12)


def test_check_guidelines_examples():
    mp = load_guideline_mapping()
    plan = np.zeros(14)
    for g in GUIDELINES:
        plan[mp[g.name]] = g.limit  # every criterion met exactly at its limit
    flags, ok = check_guidelines(plan, mp)
    assert ok and all(flags.values())
    plan[mp["Heart 25cc max"]] = 21.3
    flags, ok = check_guidelines(plan, mp)
    assert not ok and not flags["Heart 25cc max"]
    with pytest.raises(InputError):
        check_guidelines(plan, {})


@given(st.integers(0, 7), st.floats(0, 60), st.floats(0, 10))
def test_guidelines_are_monotone(which, value, step):
    mp = load_guideline_mapping()
    g = GUIDELINES[which]
    plan = np.full(14, 30.0)
    plan[mp[g.name]] = value
    before = check_guidelines(plan, mp)[0][g.name]
    plan[mp[g.name]] = value + step if g.sense == "max" else value - step
    after = check_guidelines(plan, mp)[0][g.name]
    assert not (after and not before)


@settings(max_examples=10)
@given(st.integers(0, 10_000), st.integers(2, 4), st.integers(0, 2))
def test_planted_instances_are_well_posed(seed, m, n_known):
    pi = planted_instance(m, m + 2, 15, 8, seed, n_known=n_known)
    ds = pi.dataset
    assert (ds.labels.sum(), (~ds.labels).sum()) == (15, 8)
    assert check_well_posed(ds, pi.known).overall
    for x in ds.accepted:
        assert pi.true_region.contains(x, 0.0)
    for x in ds.rejected:
        assert not pi.true_region.contains(x, 0.0)
        assert not hull_membership(x, ds.accepted)
    again = planted_instance(m, m + 2, 15, 8, seed, n_known=n_known)
    np.testing.assert_array_equal(again.dataset.points, ds.points)


def test_planted_sample_labels_follow_truth():
    pi = planted_instance(2, 4, 10, 5, 3)
    fresh = pi.sample(100, 1)
    for x, lab in zip(fresh.points, fresh.labels):
        assert lab == pi.true_region.contains(x, 0.0)


def test_planted_validation():
    with pytest.raises(InputError):
        planted_instance(3, 3, 10, 5, 0)
