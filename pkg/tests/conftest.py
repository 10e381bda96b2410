"""Shared fixtures and the hypothesis profile."""
import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_rotation(rng):
    """Uniform random rotation in SO(3)."""
    Q, R = np.linalg.qr(rng.normal(size=(3, 3)))
    Q = Q * np.sign(np.diag(R))
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q


ACCEPTANCE_LINES = pytest.StashKey[list]()


@pytest.fixture
def report_criterion(request, capsys):
    """Print and record ``criterion N: PASS/FAIL (residuals, time)``.

    ``parts`` is a list of ``(name, residual, limit)``; every residual must be within its limit.
    """
    def report(number, parts, elapsed, time_limit):
        ok = all(r <= lim for _, r, lim in parts) and elapsed < time_limit
        detail = ", ".join(f"{name} {r:.3e} <= {lim:.0e}" for name, r, lim in parts)
        line = (f"criterion {number:2d}: {'PASS' if ok else 'FAIL'} "
                f"({detail}; time {elapsed:.2f} s < {time_limit:g} s)")
        request.config.stash.setdefault(ACCEPTANCE_LINES, []).append(line)
        with capsys.disabled():
            print(f"\n{line}")
        return ok
    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
