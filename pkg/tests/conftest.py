import math

import pytest

from descprox import kernels

# (criterion number, description, passed) rows filled by test_acceptance.py
ACCEPTANCE = []


def brute_dist(p, q):
    return math.sqrt(sum((a - b) * (a - b) for a, b in zip(p, q)))


def brute_hausdorff(Q, S):
    fwd = max(min(brute_dist(q, s) for s in S) for q in Q)
    bwd = max(min(brute_dist(q, s) for q in Q) for s in S)
    return max(fwd, bwd)


def brute_inf_distance(Q, S):
    return min(brute_dist(q, s) for q in Q for s in S)


@pytest.fixture(params=sorted(kernels.backends()))
def backend(request):
    return kernels.backends()[request.param]


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, text, passed in sorted(ACCEPTANCE, key=lambda r: r[0]):
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {text}")
