"""Acceptance gate: one test per criterion, run at the stated scale and tolerance.

The terminal summary prints a PASS/FAIL line per criterion.
"""

import json
import subprocess
import sys
import time

import numpy as np
import pytest

from ucwlab import fixpoint as fp
from ucwlab import proximal as px
from ucwlab import rates
from ucwlab import shadow as sh
from ucwlab.models import ModelParams, check_cat0, instantiate_model
from ucwlab.moduli import cat0_psi, check_lambda_convexity, check_property_G, derived_psi
from ucwlab.space import check_axioms

ALL = {
    "euclidean": ModelParams("euclidean", n=2),
    "lp": ModelParams("lp", n=3, p=4.0),
    "poincare": ModelParams("poincare"),
    "tree": ModelParams("tree"),
}
CAT0 = ("euclidean", "poincare", "tree")
EPS_GRID = (1e-1, 1e-2, 1e-3)


def models(kinds=ALL):
    return [instantiate_model(ALL[k]) for k in kinds]


@pytest.mark.criterion(1)
def test_axioms_all_models():
    t0 = time.perf_counter()
    for m in models():
        for rep in check_axioms(m.space, seed=101, trials=10**4):
            assert rep.tol == (1e-7 if m.kind == "poincare" else 1e-9)
            assert rep.ok, (m.kind, rep.axiom, rep.violations[:1])
    elapsed = time.perf_counter() - t0
    print(f"axiom sweep: {elapsed:.1f}s")
    assert elapsed < 60


@pytest.mark.criterion(2)
def test_cat0_inequality():
    for m in models(CAT0):
        rep = check_cat0(m, seed=102, trials=10**4)
        assert rep.ok, (m.kind, rep.violations[:1])
        if m.kind == "euclidean":
            assert max(abs(rep.max_gap), abs(rep.min_gap)) < 1e-12


@pytest.mark.criterion(3)
def test_property_g_theorem_modulus():
    for m in models():
        rep = check_property_G(m, derived_psi(m.eta), seed=103, trials=10**5)
        assert rep.ok, (m.kind, rep.violations[:1])
    for m in models(CAT0):
        rep = check_property_G(m, cat0_psi(), seed=104, trials=10**5)
        assert rep.ok, (m.kind, rep.violations[:1])


@pytest.mark.criterion(4)
def test_lambda_weighted_inequalities():
    for m in models():
        rep_min, rep_prod, _ = check_lambda_convexity(m, seed=105, trials=10**5)
        assert rep_min.ok and rep_prod.ok, (m.kind, rep_min.violations[:1], rep_prod.violations[:1])


@pytest.mark.criterion(5)
def test_fixed_point_transfer_campaigns():
    admissible = {"segment": 0, "power_n": 0, "single_step": 0}
    trials = 1500
    for m in models():
        for T in fp.mapping_library(m):
            res = fp.afp_campaign(m, T, seed=106, trials=trials)
            assert res.failed == 0, (m.kind, T.name, res.violations[:1])
            assert res.admissible_rate >= 0.5, (m.kind, T.name, res.admissible_rate)
            admissible["segment"] += res.passed
        for T in fp.asymptotic_library(m):
            fp.validate_moduli(T)
            for mode in ("power_n", "single_step"):
                res = fp.afp_asymptotic_campaign(m, T, seed=107, trials=trials, mode=mode)
                assert res.failed == 0, (m.kind, T.name, mode, res.violations[:1])
                assert res.admissible_rate >= 0.5, (m.kind, T.name, mode, res.admissible_rate)
                admissible[mode] += res.passed
    print("admissible instances:", admissible)
    assert min(admissible.values()) >= 10**4


@pytest.mark.criterion(6)
def test_monotone_metastability_bound():
    rep = rates.mono_metastability(rates.monotone_family()[0], 0.1, rates.g_const(1))
    assert rep.found_N == 3 and rep.theoretical_bound == 10
    for seq in rates.monotone_family():
        for g in rates.g_family():
            for eps in EPS_GRID:
                rep = rates.mono_metastability(seq, eps, g)
                assert rep.passed and rep.found_N <= rep.theoretical_bound, (seq.descriptor, g.name, eps)


@pytest.mark.criterion(7)
def test_quasi_monotone_metastability_bound():
    for seq in rates.quasi_monotone_family():
        rates.check_gamma_tail(seq)
        for g in rates.g_family():
            for eps in EPS_GRID:
                rep = rates.summable_metastability(seq, eps, g)
                assert rep.passed and rep.lower <= rep.found_N <= rep.theoretical_bound, \
                    (seq.descriptor, g.name, eps)
    for seq in rates.monotone_family():
        for g in rates.g_family():
            for eps in EPS_GRID:
                a = rates.mono_metastability(seq, eps, g)
                b = rates.summable_metastability(rates.as_summable(seq), eps, g)
                assert a.status == b.status, (seq.descriptor, g.name, eps)


SHADOW_MODELS = [ModelParams("euclidean", n=2), ModelParams("euclidean", n=3), ALL["lp"], ALL["poincare"],
                 ALL["tree"]]


@pytest.mark.criterion(8)
def test_shadow_metastability():
    t0 = time.perf_counter()
    gs = [rates.g_const(1), rates.g_const(10), rates.g_linear(), rates.g_exp(12), rates.g_random(0)]
    count, kinds = 0, set()
    for params in SHADOW_MODELS:
        m = instantiate_model(params)
        for sc in sh.shadow_scenarios(m):
            trace = sc.make_trace(10**4)
            if sc.convergent:
                tail = sh.shadow_tail_oscillation(sc.S, trace, 9000, 1000)
                assert tail < 1e-6, (m.kind, sc.name, tail)
            for g in gs:
                for eps in EPS_GRID:
                    rep = sc.verify(trace, eps, g)
                    assert rep.passed and rep.found_N <= rep.theoretical_bound, (m.kind, sc.name, g.name, eps)
            count += 1
            kinds.add(m.kind)
    elapsed = time.perf_counter() - t0
    print(f"{count} shadow scenarios in {elapsed:.1f}s")
    assert count >= 20 and kinds == set(ALL)
    assert elapsed < 600


def _prox_instances(m, n, seed):
    rng = np.random.default_rng(seed)
    sp = m.space
    for _ in range(n):
        yield sp.sample(rng), sp.sample(rng), float(rng.uniform(0.1, 3.0)), rng


# lp in three dimensions needs a three-level nested search, so it gets fewer instances
PROX_COUNTS = {"euclidean": 100, "lp": 5, "poincare": 20, "tree": 20}


@pytest.mark.criterion(9)
def test_prox_solver():
    for m in models():
        sp = m.space
        for a, p, lam, rng in _prox_instances(m, PROX_COUNTS[m.kind], 109):
            prob = px.ProxProblem(m, px.half_sqdist(sp, p), lam, a)
            x = px.prox(prob, method="generic")
            if m.kind == "euclidean":
                assert sp.dist(x, a + lam / (1 + lam) * (p - a)) <= 1e-6
            assert sp.dist(x, px.prox(prob, method="generic", variant=1)) <= 2e-6, m.kind
            S = sh.ball_set(sp, sp.sample(rng), float(rng.uniform(0.1, 0.6)))
            iprob = px.ProxProblem(m, px.Indicator(S), lam, a)
            y = px.prox(iprob, method="generic")
            assert sp.dist(y, S.project(a)) <= 1e-6, m.kind
            assert sp.dist(y, px.prox(iprob, method="generic", variant=1)) <= 2e-6, m.kind
        rng = np.random.default_rng(110)
        counts = (1, 2) if m.kind == "lp" else (3, 5)
        for name, f, minimizers in px.functional_library(m):
            verdicts = px.minimizer_fixed_point_check(m, f, px.library_candidates(m, minimizers, rng, *counts))
            assert all(v.agrees for v in verdicts), (m.kind, name, [v.to_dict() for v in verdicts])


@pytest.mark.criterion(10)
def test_cli_determinism(tmp_path):
    bodies = []
    for i in range(2):
        out = tmp_path / f"run{i}.json"
        res = subprocess.run([sys.executable, "-m", "ucwlab", "--suite", "all", "--seed", "7", "--out", str(out)],
                             capture_output=True, text=True)
        assert res.returncode == 0, res.stderr
        raw = out.read_bytes()
        assert json.loads(raw)["report"]["exit_code"] == 0
        # the wall-clock field comes after the report body
        bodies.append(raw.split(b'"wall_clock_seconds"')[0])
    assert bodies[0] == bodies[1]
