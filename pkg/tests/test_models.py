import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ucwlab.models import (MetricTree, ModelParams, check_cat0, instantiate_model, load_tree,
                           parse_tree_edges)
from ucwlab.space import UsageError, check_axioms


def test_euclidean_distance():
    sp = instantiate_model(ModelParams("euclidean", n=2)).space
    assert sp.dist(np.array([0.0, 0.0]), np.array([3.0, 4.0])) == 5.0


def test_lp_distance():
    sp = instantiate_model(ModelParams("lp", n=2, p=4.0)).space
    assert sp.dist(np.zeros(2), np.array([1.0, 1.0])) == pytest.approx(2 ** 0.25)


def test_poincare_distance_from_origin():
    sp = instantiate_model(ModelParams("poincare")).space
    assert sp.dist(np.zeros(2), np.array([0.5, 0.0])) == pytest.approx(math.log(3.0), abs=1e-12)


def test_poincare_midpoint_on_diameter():
    sp = instantiate_model(ModelParams("poincare")).space
    m = sp.midpoint(np.array([-0.5, 0.0]), np.array([0.5, 0.0]))
    assert np.allclose(m, 0.0, atol=1e-12)


def test_tree_path_metric():
    sp = instantiate_model(ModelParams("tree")).space
    C, E = sp.vertex("C"), sp.vertex("E")
    assert sp.dist(C, E) == pytest.approx(4.0)
    assert sp.dist(sp.vertex("A"), sp.vertex("H")) == pytest.approx(3.3)
    assert sp.dist(sp.midpoint(C, E), sp.vertex("B")) == pytest.approx(0.0, abs=1e-12)


def test_tree_point_on_edge():
    sp = instantiate_model(ModelParams("tree")).space
    x = sp.point("D", "F", 0.4)
    assert sp.dist(x, sp.vertex("D")) == pytest.approx(0.4)
    assert sp.dist(x, sp.vertex("F")) == pytest.approx(0.6)


@pytest.mark.parametrize("edges, msg", [
    ([("A", "B", 1.0), ("B", "C", 1.0), ("C", "A", 1.0)], "not a tree"),
    ([("A", "B", 1.0), ("C", "D", 1.0), ("D", "E", 1.0), ("E", "C", 1.0)], "not connected"),
    ([("A", "B", -1.0)], "non-positive"),
])
def test_tree_rejects_bad_edges(edges, msg):
    with pytest.raises(UsageError, match=msg):
        MetricTree(edges)


def test_parse_tree_edges(tmp_path):
    path = tmp_path / "t.txt"
    path.write_text("# a path\nA B 1.0\nB C 2.5  # trailing\n")
    assert load_tree(path) == [("A", "B", 1.0), ("B", "C", 2.5)]
    with pytest.raises(UsageError):
        parse_tree_edges("A B\n")


@pytest.mark.parametrize("params", [ModelParams("lp", n=2, p=1.5), ModelParams("euclidean", n=0),
                                    ModelParams("sphere")])
def test_bad_model_params(params):
    with pytest.raises(UsageError):
        instantiate_model(params)


def test_eta_assignments():
    assert instantiate_model(ModelParams("euclidean")).eta(1.0, 1.0) == pytest.approx(1 / 8)
    lp = instantiate_model(ModelParams("lp", n=2, p=4.0))
    assert lp.eta(1.0, 1.0) == pytest.approx(1 - (1 - 0.5 ** 4) ** 0.25)


def test_cat0_euclidean_is_identity():
    rep = check_cat0(instantiate_model(ModelParams("euclidean", n=3)), seed=3, trials=2000)
    assert rep.ok and abs(rep.max_gap) < 1e-12


def test_cat0_rejects_lp():
    with pytest.raises(UsageError):
        check_cat0(instantiate_model(ModelParams("lp", n=2, p=4.0)), seed=0, trials=10)


def test_cat0_fails_in_lp_geometry():
    # negative control: the CAT(0) inequality is false for p = 4 norms
    model = instantiate_model(ModelParams("lp", n=2, p=4.0))
    sp = model.space
    a, x, y = np.zeros(2), np.array([1.0, 1.0]), np.array([1.0, -1.0])
    lhs = sp.dist(sp.midpoint(x, y), a) ** 2
    rhs = 0.5 * sp.dist(x, a) ** 2 + 0.5 * sp.dist(y, a) ** 2 - 0.25 * sp.dist(x, y) ** 2
    assert lhs > rhs + 0.1


def test_axioms_all_models(model):
    assert all(r.ok for r in check_axioms(model.space, seed=5, trials=500))


@given(st.integers(0, 2**32 - 1))
def test_tree_triangle_inequality(seed):
    sp = instantiate_model(ModelParams("tree")).space
    rng = np.random.default_rng(seed)
    x, y, z = (sp.sample(rng) for _ in range(3))
    assert sp.dist(x, z) <= sp.dist(x, y) + sp.dist(y, z) + 1e-9
