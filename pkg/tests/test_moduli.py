import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ucwlab.models import ModelParams, instantiate_model
from ucwlab.moduli import (PropertyGModulus, UCModulus, cat0_modulus, cat0_psi, check_eta_monotone,
                           check_lambda_convexity, check_property_G, check_uniform_convexity,
                           clarkson_modulus, psi_eta, sample_constrained, derived_psi)
from ucwlab.space import SamplingError, UsageError


def test_psi_cat0_frozen_value():
    # eta(1, 1) = 1/8, so the inner delta is 1/1536 and psi = delta^2 / 4
    assert psi_eta(cat0_modulus(), 1.0, 2.0) == pytest.approx(1 / 9437184, rel=1e-12)


def test_psi_rejects_nonpositive_args():
    with pytest.raises(UsageError):
        psi_eta(cat0_modulus(), 0.0, 1.0)


def test_clarkson_small_eps_no_cancellation():
    eta = clarkson_modulus(4.0)
    # 1 - (1 - t)^(1/4) ~ t / 4 for t = (eps/2)^4
    assert eta(1.0, 1e-4) == pytest.approx((0.5e-4) ** 4 / 4, rel=1e-6)


def test_clarkson_requires_p_at_least_two():
    with pytest.raises(UsageError, match="p >= 2"):
        clarkson_modulus(1.5)


def test_modulus_rejects_increasing_in_r():
    with pytest.raises(UsageError, match="nonincreasing"):
        UCModulus(lambda r, eps: eps * r / 10, name="bad")


def test_modulus_rejects_nonpositive():
    with pytest.raises(UsageError):
        UCModulus(lambda r, eps: 0.0)


def test_modulus_warns_above_one():
    with pytest.warns(UserWarning):
        UCModulus(lambda r, eps: 2.0)


def test_eta_monotone_check():
    assert check_eta_monotone(cat0_modulus()).ok
    assert not check_eta_monotone(lambda r, eps: r).ok


def test_sampler_reports_infeasible_request(euclid):
    with pytest.raises(SamplingError):
        sample_constrained(euclid, np.random.default_rng(0), r=1.0, eps=3.0)


def test_sampler_constraints_hold(model):
    rng = np.random.default_rng(2)
    d = model.space.dist
    for _ in range(200):
        a, x, y, r, eps = sample_constrained(model, rng)
        assert d(x, a) <= r * (1 + 1e-12) and d(y, a) <= r * (1 + 1e-12)
        assert d(x, y) >= eps * (1 - 1e-12)


def test_uniform_convexity(model):
    assert check_uniform_convexity(model, seed=4, trials=2000).ok


def test_property_g_theorem_modulus(model):
    assert check_property_G(model, derived_psi(model.eta), seed=5, trials=2000).ok


def test_property_g_cat0_direct(euclid):
    assert check_property_G(euclid, cat0_psi(), seed=6, trials=2000).ok


def test_property_g_too_strong_modulus_fails(euclid):
    # negative control: eps^2 / 2 is twice the sharp Euclidean value
    bad = PropertyGModulus(lambda r, eps: eps * eps / 2.0, "too_strong")
    assert not check_property_G(euclid, bad, seed=7, trials=500).ok


def test_cat0_direct_modulus_fails_in_lp():
    # the eps^2/4 modulus relies on the CAT(0) inequality and must break for p = 4
    lp = instantiate_model(ModelParams("lp", n=2, p=4.0))
    assert not check_property_G(lp, cat0_psi(), seed=8, trials=3000).ok


def test_lambda_convexity(model):
    assert all(r.ok for r in check_lambda_convexity(model, seed=9, trials=1000))


@given(st.floats(1e-3, 1e3), st.floats(1e-3, 10.0))
def test_psi_bounds(r, eps):
    eta = cat0_modulus()
    v = psi_eta(eta, r, eps)
    e = eta(r, min(eps / (2 * r), 2.0))
    assert 0 < v <= eps * eps / 32 * e * e


@given(st.floats(1e-2, 10.0), st.floats(1e-3, 1.0), st.floats(1.0, 4.0))
def test_psi_nonincreasing_in_r(r, eps, scale):
    eta = cat0_modulus()
    assert psi_eta(eta, r * scale, eps) <= psi_eta(eta, r, eps) * (1 + 1e-12)


def test_no_warning_for_builtin_moduli():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        cat0_modulus()
        clarkson_modulus(3.0)
