import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from rdsweight.network import Network  # noqa: E402
from rdsweight.sampler import RecruitmentSample  # noqa: E402


def make_sample(degrees, z, recruiter, n_coupons=None, **traits):
    cols = {"z": np.asarray(z, dtype=float)}
    cols.update({k: np.asarray(v, dtype=float) for k, v in traits.items()})
    return RecruitmentSample(
        ids=[f"r{i}" for i in range(len(degrees))],
        degrees=np.asarray(degrees),
        recruiter=np.asarray(recruiter),
        traits=cols,
        n_coupons=n_coupons,
    )


@pytest.fixture
def chain_sample():
    """A(1, d=2) -> B(0, d=4) -> C(1, d=4) -> D(0, d=2)."""
    return make_sample([2, 4, 4, 2], [1, 0, 1, 0], [-1, 0, 1, 2])


@pytest.fixture
def star():
    n = 6
    edges = [(0, i) for i in range(1, n)]
    return Network(n, np.zeros(n, dtype=int), np.array(edges))


def complete_graph(n, traits=None):
    edges = [(i, j) for i in range(n) for j in range(i + 1, n)]
    traits = np.zeros(n, dtype=int) if traits is None else np.asarray(traits)
    return Network(n, traits, np.array(edges))


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in module.summary_lines():
        terminalreporter.write_line(line)
