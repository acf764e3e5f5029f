import dataclasses

import pytest

from csbcsim.config import BenchConfig, NoiseConfig, PowerSetting

ACCEPTANCE_LINES = []


@pytest.fixture
def unit_bench():
    """Noiseless bench with 1 W per beam at each PBS, so |alpha| = |beta| = 1."""
    return BenchConfig(signal=PowerSetting(30.0), lo=PowerSetting(30.0), noise=NoiseConfig.off(), seed=1)


@pytest.fixture
def weak_bench():
    return BenchConfig(seed=5)


def with_(cfg, **kw):
    return dataclasses.replace(cfg, **kw)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
