import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("leakybox", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("leakybox")


def random_density(rng, dim, rank=None):
    """Random full-rank (or given-rank) density matrix."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


@pytest.fixture
def rng():
    return np.random.default_rng(20241016)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for report in terminalreporter.getreports("passed") + terminalreporter.getreports("failed"):
        if report.when != "call":
            continue
        props = dict(report.user_properties)
        if "criterion" not in props:
            continue
        status = "PASS" if report.passed else "FAIL"
        lines.append((props["criterion"], f"{props['criterion']:<4s} {status}  {props.get('detail', '')}"))
    if lines:
        terminalreporter.section("acceptance gate")
        for _, line in sorted(lines, key=lambda x: int(x[0][1:])):
            terminalreporter.write_line(line)
