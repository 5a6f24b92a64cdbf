import numpy as np
import pytest

from uipdg.coeffs import DiffusionField

# filled by test_acceptance.py, printed at the end of the session
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def polynomial_case(k, kappa=((2.0, 0.5), (0.5, 1.0)), a=0.7, b=-1.3):
    """u = (a x + b y)^k + x - y with constant kappa; returns value, gradient, source, diffusion."""
    K = np.asarray(kappa, dtype=float)

    def value(x, y, sub=0):
        return (a * x + b * y) ** k + x - y

    def gradient(x, y, sub=0):
        s = k * (a * x + b * y) ** (k - 1)
        return np.stack(np.broadcast_arrays(s * a + 1.0, s * b - 1.0), axis=-1)

    def source(x, y, sub=0):
        if k < 2:
            return np.zeros(np.broadcast(x, y).shape)
        c = K[0, 0] * a * a + 2 * K[0, 1] * a * b + K[1, 1] * b * b
        return -k * (k - 1) * (a * x + b * y) ** (k - 2) * c

    return value, gradient, source, DiffusionField({0: K})
