import numpy as np
import pytest
from hypothesis import settings

from pdcsim.harness import SweepSpec, run_sweep
from pdcsim.model import ExperimentConfig

settings.register_profile("default", max_examples=50, deadline=None)
settings.load_profile("default")

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def nominal_cfg():
    return ExperimentConfig()


@pytest.fixture(scope="session")
def nominal_curve(nominal_cfg):
    """Detected gain curve at nominal parameters: 20 powers, 5-160 uW, 2000 pulses."""
    return run_sweep(nominal_cfg, SweepSpec(rng_seed=nominal_cfg.rng_seed))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
