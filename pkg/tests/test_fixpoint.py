import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ucwlab import fixpoint as fp
from ucwlab.models import ModelParams, instantiate_model
from ucwlab.moduli import cat0_modulus
from ucwlab.space import UsageError


def test_afp_delta_frozen_value():
    # min(eps/2, b, eps^2/(16 b) * eta(2b, 1)) with eta = eps^2/8
    assert fp.afp_delta(1.0, 2.0, cat0_modulus()) == pytest.approx(0.03125)


def test_afp_delta_rejects_nonpositive():
    with pytest.raises(UsageError):
        fp.afp_delta(0.0, 1.0, cat0_modulus())


def test_line_projection_fixes_segment(euclid):
    T = fp.line_projection_map(euclid)
    x, y = np.array([-1.0, 0.0]), np.array([2.0, 0.0])
    v = fp.check_afp_segment(euclid, T, x, y, 0.3, eps=0.01, b=5.0)
    assert v.admissible and v.passed and v.residual == 0.0


def test_precondition_failure_is_skipped(euclid):
    T = fp.line_projection_map(euclid)
    x, y = np.array([0.0, 1.0]), np.array([1.0, 0.0])
    v = fp.check_afp_segment(euclid, T, x, y, 0.5, eps=0.01, b=5.0)
    assert not v.admissible


def test_non_nonexpansive_map_breaks_segment(euclid):
    # fixes (0,0) and (1,0) but moves the midpoint of the segment between them
    T = fp.MappingSpec("bump", lambda x: np.array([x[0], x[1] + 10 * (x[0] ** 2 - x[0])]))
    v = fp.check_afp_segment(euclid, T, np.array([0.0, 0.0]), np.array([1.0, 0.0]), 0.5, eps=0.1, b=2.0)
    assert v.admissible and not v.passed
    assert not fp.check_mapping(euclid, T, seed=0, trials=200).ok


def test_scaling_campaign_passes(euclid):
    T = fp.contraction_map(euclid, np.zeros(2), 0.9)
    res = fp.afp_campaign(euclid, T, seed=1, trials=2000)
    assert res.failed == 0 and res.admissible_rate >= 0.5


def test_library_maps_nonexpansive(model):
    for T in fp.mapping_library(model):
        assert fp.check_mapping(model, T, seed=2, trials=300).ok, T.name
        assert fp.check_fix_convex(model, T, seed=3, trials=300).ok, T.name


def test_library_campaigns(model):
    for T in fp.mapping_library(model):
        res = fp.afp_campaign(model, T, seed=4, trials=300)
        assert res.failed == 0 and res.admissible_rate >= 0.5, T.name


def test_asymptotic_campaigns(model):
    for T in fp.asymptotic_library(model):
        fp.validate_moduli(T)
        for mode in ("power_n", "single_step"):
            res = fp.afp_asymptotic_campaign(model, T, seed=5, trials=200, mode=mode)
            assert res.failed == 0 and res.admissible_rate >= 0.5, (T.name, mode)


def test_block_shear_expands_then_settles():
    model = instantiate_model(ModelParams("euclidean", n=3))
    T = fp.block_shear_map(model)
    assert T.delta(1) > 0 and T.delta(200) == 0.0
    fp.validate_moduli(T)
    assert fp.check_mapping(model, T, seed=6, trials=500).ok


def test_validate_moduli_rejects_bad_u():
    dseq, _, B = fp.geometric_delta(1.0)
    T = fp.MappingSpec("bad", lambda x: x, "asymptotically_nonexpansive", dseq, lambda eps: 0, B)
    with pytest.raises(UsageError):
        fp.validate_moduli(T)


def test_mapping_kind_validated():
    with pytest.raises(UsageError):
        fp.MappingSpec("x", lambda x: x, kind="firmly")
    with pytest.raises(UsageError):
        fp.MappingSpec("x", lambda x: x, kind="asymptotically_nonexpansive")


def test_power_fn_matches_iteration(model):
    rng = np.random.default_rng(7)
    for T in fp.mapping_library(model):
        if T.power_fn is None:
            continue
        x = model.space.sample(rng)
        y = x
        for _ in range(5):
            y = T(y)
        assert model.space.dist(T.power(x, 5), y) <= 1e-9, T.name


@given(st.floats(1e-3, 10.0), st.floats(1e-3, 10.0))
def test_afp_delta_bounds(b, eps):
    d = fp.afp_delta(b, eps, cat0_modulus())
    assert 0 < d <= min(eps / 2, b)


@given(st.floats(1e-9, 10.0))
def test_geometric_delta_modulus(eps):
    dseq, u, B = fp.geometric_delta(1.0)
    k = u(eps)
    assert dseq(k) <= eps and dseq(0) <= B


@given(st.floats(1e-4, 1.0), st.floats(1e-4, 1.0), st.floats(0.1, 10.0), st.floats(0.0, 5.0))
def test_theta_and_omega_nondecreasing_in_eps(e1, e2, b, B):
    lo, hi = sorted((e1, e2))
    bundle = fp.afp_bundle(b, cat0_modulus(), lambda t: int(math.ceil(1.0 / t)), B)
    assert bundle.theta(lo) <= bundle.theta(hi)
    assert bundle.omega(lo) <= bundle.omega(hi)
