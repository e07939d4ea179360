"""Shared fixtures and the PASS/FAIL summary for the acceptance criteria."""

import pytest

from ucwlab.models import ModelParams, instantiate_model

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number checked by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not rep.failed:
        return
    n = mark.args[0]
    ok = rep.passed and _criteria.get(n, True)
    _criteria[n] = ok


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if _criteria[n] else 'FAIL'}")


MODEL_PARAMS = {
    "euclidean": ModelParams("euclidean", n=2),
    "lp": ModelParams("lp", n=3, p=4.0),
    "poincare": ModelParams("poincare"),
    "tree": ModelParams("tree"),
}


@pytest.fixture(params=list(MODEL_PARAMS))
def model(request):
    return instantiate_model(MODEL_PARAMS[request.param])


@pytest.fixture
def euclid():
    return instantiate_model(ModelParams("euclidean", n=2))
