import math

import pytest

from lrsaddle import HestonParams, gamma_sum_cgf, gaussian_cgf, heston_cgf

SV_TAIL = HestonParams(kappa=1.0, b=1.0, rho=0.3, v0=1.0, x0=0.0, T=1.0, eps=0.2)
SV_CALL = HestonParams(kappa=6.0, b=0.09, rho=0.3, v0=0.04, x0=math.log(100.0), T=1.0, eps=0.2)


@pytest.fixture
def std_normal():
    return gaussian_cgf(0.0, 1.0)


@pytest.fixture
def gamma5():
    return gamma_sum_cgf(5.0, 1.0)


@pytest.fixture(params=[0.2, 0.6, 1.0])
def sv(request):
    return heston_cgf(SV_TAIL.replace(eps=request.param))


@pytest.fixture
def sv02():
    return heston_cgf(SV_TAIL)


# -- acceptance report ------------------------------------------------------

_CRITERIA = {}


@pytest.fixture
def criterion(request):
    """Record one pass/fail line for an acceptance criterion.

    The test calls ``criterion(number, description)`` once, then ``check`` for
    every condition; the line is printed in the terminal summary.
    """

    class Recorder:
        def __call__(self, number, description):
            self.number = number
            _CRITERIA[number] = [description, True, []]

        def check(self, ok, detail):
            entry = _CRITERIA[self.number]
            if not ok:
                entry[1] = False
                entry[2].append(detail)
            return ok

    return Recorder()


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        description, ok, failures = _CRITERIA[number]
        status = "PASS" if ok else "FAIL"
        line = f"criterion {number}: {status}  {description}"
        if failures:
            line += "  [" + "; ".join(failures[:6]) + (" ..." if len(failures) > 6 else "") + "]"
        terminalreporter.write_line(line)
