import numpy as np
import pytest
from hypothesis import HealthCheck, settings

# fixed example generation keeps repeated runs byte-identical
settings.register_profile("repro", derandomize=True, deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repro")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def dense_circle_max(coeffs: dict, samples: int = 1_000_000) -> float:
    """Brute-force oracle: max |p| over ``samples`` equispaced points of the circle."""
    theta = np.linspace(0.0, 2 * np.pi, samples, endpoint=False)
    z = np.exp(1j * theta)
    vals = np.zeros(samples, dtype=complex)
    for d, c in coeffs.items():
        vals += complex(c) * z ** d
    return float(np.abs(vals).max())


def refined_circle_max(coeffs: dict, samples: int = 1_000_000, zoom: int = 200_001) -> float:
    """Dense oracle plus a second dense pass around each of the best coarse samples.

    The second pass has spacing ``2 pi / (samples * zoom / 2)``, so the error
    is far below the 1e-12 slack used by the tests.
    """
    degs = np.array(list(coeffs), dtype=float)
    cs = np.array([complex(c) for c in coeffs.values()])

    def modulus(theta):
        return np.abs(np.exp(1j * np.outer(theta, degs)) @ cs)

    theta = np.linspace(0.0, 2 * np.pi, samples, endpoint=False)
    vals = np.concatenate([modulus(chunk) for chunk in np.array_split(theta, 20)])
    h = 2 * np.pi / samples
    best = float(vals.max())
    for i in np.argsort(vals)[-4:]:
        fine = np.linspace(theta[i] - h, theta[i] + h, zoom)
        best = max(best, float(modulus(fine).max()))
    return best


ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
