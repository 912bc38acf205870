from pathlib import Path

import numpy as np
import pytest

from abelprop.model import ModelParams

DATA = Path(__file__).parent / "data"

# three negative real roots of P and a reachable x1_0; needs the trig roots
TRIG_PARAMS = dict(d1=1.0, d2=1.0, d3=1.0, b1=10.0, b2=1.0, k1=1.0, k2=1.0, N=1.0)
TRIG_STATE = (0.002, 0.2, 0.798)

_acceptance_lines = []


def record_criterion(number, passed, detail):
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}"
    _acceptance_lines.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)


@pytest.fixture
def ones():
    return ModelParams(1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, N=1.0)


@pytest.fixture
def trig_params():
    return ModelParams(**TRIG_PARAMS)


@pytest.fixture
def trig_state():
    return TRIG_STATE


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_params(rng, N=None):
    rates = rng.uniform(0.1, 2.0, size=7)
    return ModelParams(*rates, N=float(rng.uniform(0.5, 2.0)) if N is None else N)
