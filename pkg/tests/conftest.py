import numpy as np
import pytest

from qillum import ChannelParams, SceneGeometry
from qillum.gaussian_states import GaussianState


@pytest.fixture(scope="session")
def ref_point():
    """Low-brightness, high-noise operating point used for the M sweeps."""
    return ChannelParams(0.01, 0.01, 20.0), SceneGeometry.from_rayleigh(0.5, lambda_s=1.55e-6, d=0.1)


@pytest.fixture(scope="session")
def small():
    """Oracle-regime instance small enough for truncated Fock spaces."""
    return ChannelParams(0.05, 0.02, 0.2), SceneGeometry.from_rayleigh(0.5)


def random_orthosymplectic(n, rng):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    u, _ = np.linalg.qr(z)
    return np.block([[u.real, -u.imag], [u.imag, u.real]])


def random_state(n, rng, max_sq=0.8, max_thermal=2.0):
    """Random physical Gaussian state: passive * squeezing * passive acting on thermal noise."""
    nu = 1.0 + 2.0 * rng.uniform(0, max_thermal, n)
    r = rng.uniform(-max_sq, max_sq, n)
    sq = np.diag(np.concatenate([np.exp(r), np.exp(-r)]))
    s = random_orthosymplectic(n, rng) @ sq @ random_orthosymplectic(n, rng)
    cov = s @ np.diag(np.concatenate([nu, nu])) @ s.T
    return GaussianState(rng.normal(scale=0.5, size=2 * n), 0.5 * (cov + cov.T)), np.sort(nu)[::-1]


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_report():
    """Record one summary line per acceptance criterion."""

    def record(label, passed, detail):
        line = f"{label}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
