import numpy as np
import pytest


def random_spd(rng, p, cond=50.0):
    q, _ = np.linalg.qr(rng.standard_normal((p, p)))
    lam = np.exp(rng.uniform(0.0, np.log(cond), p))
    a = (q * lam) @ q.T
    return 0.5 * (a + a.T)


def random_full_rank(rng, p):
    while True:
        a = rng.standard_normal((p, p))
        if abs(np.linalg.det(a)) > 0.1:
            return a


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# -- acceptance reporting ---------------------------------------------------

_CRITERIA = {}


class Criterion:
    def __init__(self, number, title):
        self.number, self.title = number, title
        self.passed, self.detail = False, "not evaluated"

    def check(self, ok, detail):
        self.passed, self.detail = bool(ok), detail
        print(self.line())
        assert ok, f"criterion {self.number} ({self.title}): {detail}"

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.number}: {self.title}: {self.detail}"


@pytest.fixture
def criterion(request):
    marker = request.node.get_closest_marker("criterion")
    number, title = marker.args
    c = Criterion(number, title)
    _CRITERIA[number] = c
    return c


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        terminalreporter.write_line(_CRITERIA[number].line())
