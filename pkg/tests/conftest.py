import time
from contextlib import contextmanager

import numpy as np
import pytest

from smallfock.fockspace import SpaceParams
from smallfock.geometry import PointSequence

ACCEPTANCE = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = {}


@pytest.fixture
def criterion(request):
    """Context manager that times a block and logs a PASS/FAIL line for it."""
    log = request.config.stash[ACCEPTANCE]

    @contextmanager
    def run(number: int, title: str, budget: float):
        t0 = time.perf_counter()
        try:
            yield
        except BaseException as exc:
            log[number] = (title, False, time.perf_counter() - t0, budget, str(exc).splitlines()[0:1])
            raise
        dt = time.perf_counter() - t0
        ok = dt <= budget
        log[number] = (title, ok, dt, budget, [] if ok else [f"runtime {dt:.2f}s > {budget}s"])
        assert ok, f"runtime {dt:.2f}s exceeds the {budget}s budget"

    return run


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(ACCEPTANCE, {})
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(log):
        title, ok, dt, budget, why = log[number]
        line = f"[{'PASS' if ok else 'FAIL'}] {number:2d}. {title} ({dt:.2f}s / {budget:g}s)"
        if why:
            line += f" :: {why[0]}"
        terminalreporter.write_line(line)


def lattice(t, theta=None, window=None):
    t = np.asarray(t, dtype=float)
    return PointSequence.from_arrays(t, None if theta is None else np.asarray(theta), window)


def gamma_points(alpha: float, p: float, n_lo: int, n_hi: int) -> PointSequence:
    """Critical lattice ``t_n = (n + 2/p - 1)/(2 alpha)`` for ``n_lo <= n <= n_hi``."""
    params = SpaceParams(alpha, p)
    n = np.arange(n_lo, n_hi + 1)
    t = (n + params.two_over_p - 1) * params.cell
    return PointSequence.from_arrays(t, np.zeros_like(t))
