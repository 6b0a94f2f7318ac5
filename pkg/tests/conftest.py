import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from helixlab.synthesis import negative_corpus, slant_corpus, w_curve_corpus

settings.register_profile(
    "helixlab",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("helixlab")

# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)


def rotation(n, seed):
    q, r = np.linalg.qr(np.random.default_rng(seed).normal(size=(n, n)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def helix_coords(a, b):
    return [f"{a!r}*cos(t)", f"{a!r}*sin(t)", f"{b!r}*t"]


def salkowski_coords(m):
    """Constant-curvature curve with V_2 at angle arccos(m / sqrt(1 + m^2)) to e_3."""
    n = m / math.sqrt(1 + m * m)
    w = 1 / math.sqrt(1 + m * m)
    a = (1 - n) / (4 * (1 + 2 * n))
    b = (1 + n) / (4 * (1 - 2 * n))
    p, q = 1 + 2 * n, 1 - 2 * n
    return [
        f"{w!r}*(-({a!r})*sin({p!r}*t) - ({b!r})*sin({q!r}*t) - 0.5*sin(t))",
        f"{w!r}*(({a!r})*cos({p!r}*t) + ({b!r})*cos({q!r}*t) + 0.5*cos(t))",
        f"{w / (4 * m)!r}*cos({2 * n!r}*t)",
    ]


@pytest.fixture(scope="session")
def slant_records():
    return {n: slant_corpus(n, 20, seed=100 * n) for n in (3, 4, 5)}


@pytest.fixture(scope="session")
def w_records():
    return {n: w_curve_corpus(n, 10, seed=7 + n) for n in (3, 4, 5)}


@pytest.fixture(scope="session")
def negative_records():
    return negative_corpus((3, 4, 5), 100, seed=1000)
