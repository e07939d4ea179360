import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ucwlab.models import ModelParams, instantiate_model
from ucwlab.space import AxiomReport, UsageError, check_axioms, combine, sample_lambda, summarize

coord = st.floats(-5, 5, allow_nan=False)
unit = st.floats(0, 1)


def test_combine_is_linear_interpolation(euclid):
    sp = euclid.space
    got = combine(sp, np.array([0.0, 0.0]), np.array([2.0, 0.0]), 0.25)
    assert np.allclose(got, [0.5, 0.0])


def test_combine_rejects_foreign_point(euclid):
    with pytest.raises(UsageError):
        combine(euclid.space, np.zeros(3), np.zeros(2), 0.5)


def test_axioms_euclidean_clean(euclid):
    reps = check_axioms(euclid.space, seed=1, trials=2000)
    assert all(r.ok for r in reps)
    assert set(summarize(reps)) == {"metric", "W1", "W2", "W3", "W4", "W5", "quad", "geodesic"}


def test_axioms_reject_zero_trials(euclid):
    with pytest.raises(UsageError):
        check_axioms(euclid.space, seed=0, trials=0)


def test_report_records_violation():
    rep = AxiomReport("demo", trials=2, tol=1e-9)
    rep.record(-1.0, 0.0, 1.0)
    rep.record(0.5, 1.5, 1.0, lambda: {"x": 1})
    assert rep.n_violations == 1 and not rep.ok
    assert rep.to_dict()["violations"][0]["inputs"] == {"x": 1}
    assert rep.max_gap == 0.5


def test_sample_lambda_in_unit_interval():
    rng = np.random.default_rng(0)
    lams = [sample_lambda(rng) for _ in range(2000)]
    assert min(lams) >= 0 and max(lams) <= 1
    assert 0.5 in lams


@given(st.lists(coord, min_size=6, max_size=6), unit)
def test_w1_euclidean(xs, lam):
    sp = instantiate_model(ModelParams("euclidean", n=2)).space
    x, y, z = (np.array(xs[i:i + 2]) for i in (0, 2, 4))
    lhs = sp.dist(z, sp.combine(x, y, lam))
    assert lhs <= (1 - lam) * sp.dist(z, x) + lam * sp.dist(z, y) + 1e-9


@given(st.lists(coord, min_size=4, max_size=4), unit, unit)
def test_w2_lp(xs, lam, mu):
    sp = instantiate_model(ModelParams("lp", n=2, p=4.0)).space
    x, y = np.array(xs[:2]), np.array(xs[2:])
    lhs = sp.dist(sp.combine(x, y, lam), sp.combine(x, y, mu))
    assert math.isclose(lhs, abs(lam - mu) * sp.dist(x, y), rel_tol=1e-9, abs_tol=1e-9)


disk_pt = st.tuples(st.floats(0, 0.95), st.floats(0, 2 * math.pi)).map(
    lambda rt: np.array([rt[0] * math.cos(rt[1]), rt[0] * math.sin(rt[1])]))


@settings(max_examples=200)
@given(disk_pt, disk_pt, disk_pt, disk_pt, unit)
def test_w4_poincare(x, y, z, w, lam):
    sp = instantiate_model(ModelParams("poincare")).space
    lhs = sp.dist(sp.combine(x, z, lam), sp.combine(y, w, lam))
    assert lhs <= (1 - lam) * sp.dist(x, y) + lam * sp.dist(z, w) + 1e-7


@given(disk_pt, disk_pt, unit)
def test_geodesic_consistency_poincare(x, y, lam):
    sp = instantiate_model(ModelParams("poincare")).space
    p = sp.combine(x, y, lam)
    assert sp.dist(x, p) == pytest.approx(lam * sp.dist(x, y), abs=1e-7)
    assert sp.dist(p, y) == pytest.approx((1 - lam) * sp.dist(x, y), abs=1e-7)
