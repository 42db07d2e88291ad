import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

CRITERIA: list[str] = []


def record_criterion(number: int, ok: bool, detail: str) -> None:
    CRITERIA.append(f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}")


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA:
            terminalreporter.write_line(line)


def clayton_density(u, v, theta):
    """Bivariate Clayton copula density in the ``(u^-d + v^-d - 1)^(-1/d)`` form, ``d = 1/theta``."""
    d = 1.0 / theta
    return (1 + d) * (u * v) ** (-d - 1) * (u**-d + v**-d - 1) ** (-2 - 1 / d)


def clayton_cdf(u, v, theta):
    d = 1.0 / theta
    return (u**-d + v**-d - 1) ** (-1 / d)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
