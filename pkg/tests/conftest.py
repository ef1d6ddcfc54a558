import numpy as np
import pytest
from hypothesis import strategies as st

from aimdsched.model import NodeParams, SystemConfig, table1_config

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def table1():
    return table1_config()


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES.append


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_config(rng: np.random.Generator, n_max: int = 8, far_out: float | None = None) -> SystemConfig:
    """Feasible random config; ``far_out`` scales w0 to that many times the first invariant set."""
    n = int(rng.integers(1, n_max + 1))
    alpha = rng.uniform(0.5, 20.0, n)
    beta = rng.uniform(0.05, 0.95, n)
    lam = float(rng.uniform(5.0, 200.0))
    u0 = rng.uniform(0.0, 1.0, n) * lam / n
    T0 = (lam - float(beta @ u0)) / (alpha.sum() / 2)
    if far_out is None:
        w0 = rng.uniform(0.0, 50.0, n)
    else:
        w0 = rng.uniform(1.0, far_out, n) * alpha / 2 * T0**2
    nodes = tuple(NodeParams(*map(float, row)) for row in zip(alpha, beta, u0, w0))
    return SystemConfig(lam, nodes)


@st.composite
def configs(draw, n_max=6):
    n = draw(st.integers(1, n_max))
    alpha = [draw(st.floats(0.01, 50.0)) for _ in range(n)]
    beta = [draw(st.floats(0.01, 0.99)) for _ in range(n)]
    lam = draw(st.floats(0.5, 500.0))
    share = [draw(st.floats(0.0, 1.0)) for _ in range(n)]
    u0 = [s * lam / n for s in share]
    w0 = [draw(st.floats(0.0, 100.0)) for _ in range(n)]
    return SystemConfig(lam, tuple(NodeParams(*row) for row in zip(alpha, beta, u0, w0)))
