import numpy as np
import pytest

from qpigeon import kernels


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    """Run the test once per available Jacobi backend."""
    previous = kernels.use_backend(request.param)
    yield request.param
    kernels.use_backend(previous)


@pytest.fixture
def rng():
    return np.random.default_rng(20201015)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(RESULTS, key=lambda k: (int(k[1:].rstrip("abc")), k)):
        passed, detail = RESULTS[key]
        terminalreporter.write_line(f"{key:<5} {'PASS' if passed else 'FAIL'}  {detail}")
