import json

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from blconst.datum import make_datum
from blconst.sampling import random_signature

settings.register_profile("default", deadline=None, derandomize=True,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

_CRITERIA = {}


def record_criterion(number, passed, detail):
    """Called by the acceptance module; lines are echoed in the terminal summary."""
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
    _CRITERIA[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        terminalreporter.write_line(_CRITERIA[k])


def scaled_datum(rng, max_n=3):
    """Random maps with exponents on the scaling condition, no finiteness filter."""
    n = int(rng.integers(1, max_n + 1))
    _, dims, p = random_signature(rng, n)
    return make_datum(n, [(pj, rng.standard_normal((d, n))) for pj, d in zip(p, dims)])


def parallel_datum(p=(1.0, 1.0)):
    return make_datum(2, [(pj, [[1.0 + j, 0.0]]) for j, pj in enumerate(p)])


@pytest.fixture
def write_datum(tmp_path):
    def _write(datum, name="datum.json"):
        path = tmp_path / name
        path.write_text(datum.to_json(indent=2) if hasattr(datum, "to_json") else json.dumps(datum))
        return str(path)
    return _write


@pytest.fixture
def rng():
    return np.random.default_rng(2024)
