import numpy as np
import pytest

from vesiflow.dynamics import State
from vesiflow.littlewood_paley import random_band_limited
from vesiflow.spectral import GridSpec, SpectralScalar, SpectralVector, leray_project


def cos_mode(grid: GridSpec, axis: int = 1, m: int = 1, amplitude: float = 1.0) -> SpectralScalar:
    x = grid.coordinates()[axis - 1]
    return SpectralScalar.from_samples(np.broadcast_to(amplitude * np.cos(2 * np.pi * m * x), grid.shape))


def random_velocity(grid: GridSpec, rng, band: int = 3, amplitude: float = 1.0) -> SpectralVector:
    comps = np.stack([random_band_limited(grid, rng, band, amplitude).coeffs for _ in range(3)])
    return leray_project(SpectralVector(grid, comps))


def random_state(grid: GridSpec, seed: int, u_amp: float = 0.5, phi_amp: float = 0.2,
                 band: int = 2, mean: float = 0.0) -> State:
    rng = np.random.default_rng(seed)
    u = random_velocity(grid, rng, band, u_amp)
    return State(0.0, u, random_band_limited(grid, rng, band, phi_amp, mean))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def g16():
    return GridSpec.cube(16)


@pytest.fixture(scope="session")
def g32():
    return GridSpec.cube(32)


# one verdict line per acceptance criterion, printed in the terminal summary
_VERDICTS: dict[str, tuple[str, str, str]] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        num, _, label = report.nodeid.split("::")[-1][len("test_criterion_"):].partition("_")
        detail = dict(report.user_properties).get("detail", "")
        _VERDICTS[f"{int(num)}"] = (label.replace("_", " "), "PASS" if report.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_VERDICTS, key=int):
        label, verdict, detail = _VERDICTS[num]
        terminalreporter.write_line(f"{verdict} criterion {num} ({label}): {detail}")
