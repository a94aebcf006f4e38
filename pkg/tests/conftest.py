import numpy as np
import pytest

from fatigue_automl.synth import SynthConfig, generate_synthetic


@pytest.fixture(scope="session")
def synth_small():
    return generate_synthetic(SynthConfig(n_rows=300, seed=11, missing_rates={"R_eH": 0.1, "f_T": 0.2}))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from tests.test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        status, detail = RESULTS[n]
        terminalreporter.write_line(f"criterion {n}: {status}  {detail}")
