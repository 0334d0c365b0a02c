import numpy as np
import pytest

from phasecon import ChannelParams, QuadratureGrid, reference_constellation


@pytest.fixture(scope="session")
def psk8():
    return reference_constellation("psk", 8)


@pytest.fixture(scope="session")
def grid7():
    return QuadratureGrid.of_degree(7)


@pytest.fixture(scope="session")
def grid15():
    return QuadratureGrid.of_degree(15)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)


def random_unit_power_constellation(rng, size=8):
    """Random distinct points normalized to unit average power."""
    from phasecon import make_constellation

    pts = rng.normal(size=size) + 1j * rng.normal(size=size)
    pts /= np.sqrt(np.mean(np.abs(pts) ** 2))
    return make_constellation(pts, rng.permutation(size))


def channel(snr_db, pnsd_deg):
    return ChannelParams.from_snr_pnsd(snr_db, pnsd_deg)


# Verdict lines recorded by the acceptance tests; echoed after the run so the
# measured values appear in the terminal log even with output capture on.
CRITERION_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERION_LINES:
            terminalreporter.write_line(line)
