import math
import sys

import numpy as np
import pytest
from hypothesis import settings

from srm.model import EnsembleConfig

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

R2 = 1 / math.sqrt(2)


def uniform(M: int, N: int = 100, theta: float = 0.0, signs=None) -> EnsembleConfig:
    signs = np.ones(M) if signs is None else np.asarray(signs, dtype=float)
    return EnsembleConfig(M=M, N=N, eta=np.full(M, 1 / M), c=signs / math.sqrt(M), theta=theta)


@pytest.fixture
def asym():
    return EnsembleConfig(M=2, N=100, eta=[0.5, 0.5], c=[0.8, 0.6], theta=1.0)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in module.summary_lines():
        terminalreporter.write_line(line)
