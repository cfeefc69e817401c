import numpy as np
import pytest

from raysense.radar_model import WaveformConfig, default_array
from raysense.scenario import bundled_scenario


@pytest.fixture
def ref_cfg():
    return WaveformConfig()


@pytest.fixture
def ref_array(ref_cfg):
    return default_array(ref_cfg.wavelength)


@pytest.fixture
def small_cfg():
    # desk-size waveform for fast statistical and oracle tests
    return WaveformConfig(n_chirps=32, n_samples=64)


@pytest.fixture
def guardrail_path():
    return bundled_scenario("guardrail")


@pytest.fixture
def point_target_path():
    return bundled_scenario("point_target")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance criteria report lines, printed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
