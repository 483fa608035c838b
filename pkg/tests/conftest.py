import pytest

from trafficroute.synth import generate_synthetic_city

from builders import FIVE_NODE_EDGES, graph_from_lengths


@pytest.fixture
def five_node():
    return graph_from_lengths(FIVE_NODE_EDGES)


@pytest.fixture(scope="session")
def city_10x10():
    return generate_synthetic_city(10, 10, seed=11).normalized()


@pytest.fixture(scope="session")
def city_with_holes():
    # seed pinned: trials 26 and 75 of generate_trials(city, 200, 0) are unreachable
    return generate_synthetic_city(20, 20, seed=0, removal_prob=0.05).normalized()


# -- acceptance report ----------------------------------------------------------

_ACCEPTANCE: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    n, title = marker.args
    failed = report.failed
    if report.when == "call" or failed:
        previous = _ACCEPTANCE.get(n, (None, title))[0]
        status = "FAIL" if failed or previous == "FAIL" else "PASS"
        _ACCEPTANCE[n] = (status, title)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        status, title = _ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d} {status}: {title}")
