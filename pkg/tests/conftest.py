import pytest

from slmopt import SearchDomain, get_function


@pytest.fixture
def square2():
    return SearchDomain.box(-2.0, 2.0, 2)


@pytest.fixture(params=["f1", "easom", "dejong-f2"])
def suite_fn(request):
    return get_function(request.param)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        ok, detail = RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
