import numpy as np
import pytest

from factored_mdp import random_mdp, random_normalized


def make_pair(seed, m=None, n=None, k=None, gamma=None, linear=False):
    """Random MDP and a normalised model on it."""
    rng = np.random.default_rng(seed)
    m = m or int(rng.integers(2, 9))
    n = n or int(rng.integers(1, m + 1))
    k = k or int(rng.integers(1, 4))
    gamma = float(rng.uniform(0.1, 0.95)) if gamma is None else gamma
    mdp = random_mdp(rng, m, k, gamma)
    return mdp, random_normalized(mdp, n, rng, linear=linear)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.format_results():
        terminalreporter.write_line(line)
