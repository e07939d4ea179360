import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ucwlab import rates
from ucwlab.rates import InputError, RealSeq


def geometric():
    return RealSeq(descriptor="2^-n", b=1.0, batch=lambda n: 2.0 ** -n.astype(float))


def test_geometric_frozen_witness():
    rep = rates.mono_metastability(geometric(), 0.1, rates.g_const(1))
    assert rep.found_N == 3 and rep.theoretical_bound == 10 and rep.passed
    assert rep.window == (3, 4)


def test_tilde_iterate():
    assert rates.tilde_iterate(rates.g_const(10), 3, 0) == (30, True)
    assert rates.tilde_iterate(rates.g_exp(), 2, 1) == (11, True)
    assert rates.tilde_iterate(rates.g_linear(), 5, 0) == (0, True)
    v, exact = rates.tilde_iterate(rates.g_exp(), 100, 1, ceiling=1000)
    assert v > 1000 and not exact


def test_running_max_random():
    g = rates.g_random(3)
    vals = [g(n) for n in range(5000)]
    assert all(g.running_max(n) == max(vals[:n + 1]) for n in (0, 10, 4095, 4999))
    assert g.M(17) == g.running_max(17)


def test_step_sequence_needs_window_past_jump():
    rep = rates.mono_metastability(rates.step_sequence(50), 0.5, rates.g_const(100))
    assert rep.found_N == 50 and rep.theoretical_bound == 200 and rep.passed


def test_nonmonotone_input_rejected():
    seq = RealSeq(descriptor="alt", b=1.0, batch=lambda n: (n % 2).astype(float))
    with pytest.raises(InputError):
        rates.mono_metastability(seq, 0.1, rates.g_const(1))


def test_out_of_range_input_rejected():
    seq = RealSeq(descriptor="big", b=1.0, batch=lambda n: np.full(n.shape, 3.0))
    with pytest.raises(InputError):
        rates.mono_metastability(seq, 0.1, rates.g_const(1))


def test_gamma_tail_validation():
    seq = rates.quasi_monotone_family()[0]
    rates.check_gamma_tail(seq)
    bad = RealSeq(descriptor="bad", b=1.0, batch=seq.batch, error_batch=seq.error_batch,
                  gamma_tail=lambda e: 0, B=seq.B)
    with pytest.raises(InputError):
        rates.check_gamma_tail(bad)


@pytest.mark.parametrize("eps", [1e-1, 1e-2, 1e-3])
def test_monotone_family_grid(eps):
    for seq in rates.monotone_family():
        for g in rates.g_family():
            rep = rates.mono_metastability(seq, eps, g)
            assert rep.passed and rep.found_N <= rep.theoretical_bound, (seq.descriptor, g.name)


@pytest.mark.parametrize("eps", [1e-1, 1e-2, 1e-3])
def test_quasi_family_grid(eps):
    for seq in rates.quasi_monotone_family():
        for g in rates.g_family():
            rep = rates.summable_metastability(seq, eps, g)
            assert rep.passed and rep.lower <= rep.found_N <= rep.theoretical_bound, (seq.descriptor, g.name)


def test_zero_errors_degenerate_to_monotone():
    for seq in rates.monotone_family():
        for g in rates.g_family():
            a = rates.mono_metastability(seq, 0.01, g)
            b = rates.summable_metastability(rates.as_summable(seq), 0.01, g)
            assert a.status == b.status == "pass"


def test_report_serializes_huge_bound():
    rep = rates.MetastabilityReport(0.1, "g", 2**80, False, None, None, None, "inconclusive")
    assert rep.to_dict()["theoretical_bound"] == str(2**80)


def test_g_star_picks_first_maximizer():
    gs = rates.g_star(rates.step_sequence(5), rates.g_const(10))
    assert gs(0) == 5 and gs(6) == 0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 400), st.floats(0.05, 1.0), st.integers(1, 50), st.floats(1e-3, 0.5))
def test_step_sequences_respect_bound(K, b, c, eps):
    seq = rates.step_sequence(K, b)
    rep = rates.mono_metastability(seq, eps, rates.g_const(c))
    assert rep.passed
    assert rep.found_N <= math.ceil(b / eps) * c


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=200), st.floats(1e-3, 0.5))
def test_random_monotone_sequences(drops, eps):
    vals = 1.0 - np.minimum(1.0, np.cumsum(sorted(drops, reverse=True)) / max(1.0, sum(drops)))
    seq = RealSeq(descriptor="random", b=1.0,
                  batch=lambda n: np.where(n < len(vals), vals[np.minimum(n, len(vals) - 1)], vals[-1]))
    for g in (rates.g_const(1), rates.g_const(7), rates.g_linear()):
        rep = rates.mono_metastability(seq, eps, g)
        assert rep.passed and rep.found_N <= rep.theoretical_bound


@given(st.integers(0, 50), st.integers(0, 500), st.integers(0, 500))
def test_tilde_iterate_is_monotone(k, n0, n1):
    for g in (rates.g_const(3), rates.g_linear(), rates.g_random(4)):
        lo, hi = sorted((n0, n1))
        gm = g.M  # order preservation needs a nondecreasing g
        assert rates.tilde_iterate(gm, k, lo, None)[0] <= rates.tilde_iterate(gm, k, hi, None)[0]
        assert rates.tilde_iterate(g, k, lo, None)[0] <= rates.tilde_iterate(g, k + 1, lo, None)[0]


@given(st.integers(0, 300))
def test_g_star_dominated_by_running_max(n):
    g = rates.g_random(11, high=30)
    seq = rates.monotone_family()[0]
    assert 0 <= rates.g_star(seq, g)(n) <= g(n) <= g.M(n)
