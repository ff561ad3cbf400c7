import numpy as np
import pytest

_ACCEPTANCE = {}


def random_full_rank(rng, m, n, max_cond=1e3):
    while True:
        j2 = rng.standard_normal((m, n))
        if np.linalg.cond(j2) < max_cond:
            return j2


def random_instance(rng):
    """Well-conditioned saddle instance: (B, J2, g, h) with n <= 8, 1 <= m < n."""
    n = int(rng.integers(2, 9))
    m = int(rng.integers(1, n))
    j2 = random_full_rank(rng, m, n)
    if rng.uniform() < 0.5:
        b = np.eye(n)
    else:
        a = rng.standard_normal((n, int(rng.integers(1, n + 1))))
        b = a @ a.T + rng.uniform(0.1, 1.0) * np.eye(n)
    return b, j2, rng.standard_normal(n), rng.standard_normal(m)


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


def pytest_runtest_logreport(report):
    if "test_acceptance.py" in report.nodeid and report.when == "call":
        _ACCEPTANCE[report.nodeid.split("::")[-1]] = report.outcome
    elif "test_acceptance.py" in report.nodeid and report.failed:
        _ACCEPTANCE[report.nodeid.split("::")[-1]] = "failed"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE, key=lambda s: int(s.split("_")[2])):
        outcome = _ACCEPTANCE[name]
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")
