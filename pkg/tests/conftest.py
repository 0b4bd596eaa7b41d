import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from dlab.spectral import SpectralState

settings.register_profile("dlab", max_examples=30, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("dlab")


def random_state(n, R, seed, density=1.0):
    rng = np.random.default_rng(seed)
    shape = (2 * R + 1,) * n
    c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    if density < 1.0:
        c *= rng.random(shape) < density
    return SpectralState(n, R, c)


@pytest.fixture
def rstate():
    return random_state


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            name = getattr(rep, "nodeid", "")
            if "test_acceptance.py::test_criterion_" in name and rep.when == "call":
                crit = name.split("::")[-1][len("test_criterion_"):]
                num, _, label = crit.partition("_")
                lines.append((int(num), f"criterion {num} ({label.replace('_', ' ')}): "
                                        f"{'PASS' if rep.passed else 'FAIL'}"))
    if lines:
        terminalreporter.section("acceptance")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
