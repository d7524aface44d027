import math

import numpy as np
import pytest

# Filled by tests/test_acceptance.py, printed after the run.
ACCEPTANCE_RESULTS = []


def record(criterion, ok, detail=""):
    ACCEPTANCE_RESULTS.append((criterion, bool(ok), detail))
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, ok, detail in ACCEPTANCE_RESULTS:
        line = f"{'PASS' if ok else 'FAIL'}  {criterion}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)


def naive_mix(eta, L):
    """Unshifted direct summation; breaks down when exp underflows."""
    K = len(L)
    u = [math.exp(-eta * x) for x in L]
    s = math.fsum(u)
    return [x / s for x in u], -math.log(s / K) / eta


def brute_ftl_weights(L):
    best = min(L)
    idx = [k for k, x in enumerate(L) if x == best]
    return [1 / len(idx) if k in idx else 0.0 for k in range(len(L))]


def random_streams(n, seed, k_range=(2, 5), t_range=(1, 100)):
    rng = np.random.default_rng(seed)
    for _ in range(n):
        K = int(rng.integers(k_range[0], k_range[1] + 1))
        T = int(rng.integers(t_range[0], t_range[1] + 1))
        yield rng.random((T, K))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
