import os

import pytest
from hypothesis import HealthCheck, settings

from concbound.maxent import solve_maxent
from concbound.model import gen_simplex, gen_transportation

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

BENCH_R = (108, 286, 71, 127)
BENCH_C = (220, 215, 93, 64)


@pytest.fixture(scope="session")
def bench_spec():
    return gen_transportation(BENCH_R, BENCH_C)


@pytest.fixture(scope="session")
def bench_sol(bench_spec):
    return solve_maxent(bench_spec)


@pytest.fixture(scope="session")
def simplex42():
    spec = gen_simplex(4, 2)
    return spec, solve_maxent(spec)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(RESULTS):
        checks = RESULTS[cid]
        failed = [c for c in checks if not c[1]]
        status = "PASS" if not failed else "FAIL"
        terminalreporter.write_line(f"criterion {cid}: {status} ({len(checks) - len(failed)}/{len(checks)} checks)")
        for name, ok, detail in checks:
            terminalreporter.write_line(f"    [{'pass' if ok else 'FAIL'}] {name}: {detail}")
